#pragma once

#include <array>
#include <string_view>

namespace palpatron::detail
{

struct QuizAsset
{
  std::string_view scenario;
  std::string_view json;
};

const std::array<QuizAsset, 4>& quiz_assets();

}  // namespace palpatron::detail
