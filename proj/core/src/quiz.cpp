#include "palpatron/quiz.hpp"

#include "palpatron/error.hpp"
#include "quiz_assets.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace palpatron
{

std::string_view to_string(QuizAttribute attribute)
{
  switch (attribute)
  {
    case QuizAttribute::Color: return "color";
    case QuizAttribute::Consistency: return "consistency";
    case QuizAttribute::Diagnosis: return "diagnosis";
  }
  return "diagnosis";
}

std::optional<QuizAttribute> parse_quiz_attribute(std::string_view text)
{
  for (auto a : {QuizAttribute::Color, QuizAttribute::Consistency, QuizAttribute::Diagnosis})
  {
    if (to_string(a) == text)
    {
      return a;
    }
  }
  return std::nullopt;
}

std::vector<QuizItem> parse_quiz_bank(std::string_view json_text)
{
  std::vector<QuizItem> items;
  try
  {
    const auto doc = nlohmann::json::parse(json_text);
    if (!doc.is_array())
    {
      throw ConfigError("quiz bank must be a JSON array");
    }
    std::set<std::string> ids;
    for (const auto& entry : doc)
    {
      QuizItem item;
      item.id = entry.at("id").get<std::string>();
      item.prompt = entry.at("prompt").get<std::string>();
      item.choices = entry.at("choices").get<std::vector<std::string>>();
      item.correct_index = entry.at("correct_index").get<std::size_t>();
      const auto attribute = parse_quiz_attribute(entry.at("attribute").get<std::string>());
      if (!attribute)
      {
        throw ConfigError("quiz item '" + item.id + "' has an unknown attribute");
      }
      item.attribute = *attribute;
      if (item.choices.size() < 2 || item.correct_index >= item.choices.size())
      {
        throw ConfigError("quiz item '" + item.id + "' needs >= 2 choices and a valid correct_index");
      }
      if (!ids.insert(item.id).second)
      {
        throw ConfigError("duplicate quiz item id '" + item.id + "'");
      }
      items.push_back(std::move(item));
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ConfigError(std::string("malformed quiz bank: ") + e.what());
  }
  return items;
}

std::vector<QuizItem> quiz_bank(Scenario scenario)
{
  for (const auto& asset : detail::quiz_assets())
  {
    if (asset.scenario == to_string(scenario))
    {
      return parse_quiz_bank(asset.json);
    }
  }
  throw ConfigError("no quiz bank for scenario " + std::string(to_string(scenario)));
}

std::string_view to_string(QuizErrorCode code)
{
  switch (code)
  {
    case QuizErrorCode::UnknownItem: return "unknown_item";
    case QuizErrorCode::RepeatedAnswer: return "repeated_answer";
    case QuizErrorCode::WrongPhase: return "wrong_phase";
    case QuizErrorCode::InvalidChoice: return "invalid_choice";
  }
  return "unknown_item";
}

Quiz::Quiz(std::vector<QuizItem> items) : items_(std::move(items)) {}

GradedAnswer Quiz::submit(std::string_view item_id, std::size_t choice_index)
{
  const auto it = std::find_if(items_.begin(), items_.end(),
                               [&](const QuizItem& item) { return item.id == item_id; });
  if (it == items_.end())
  {
    throw QuizError(QuizErrorCode::UnknownItem, "unknown quiz item '" + std::string(item_id) + "'");
  }
  if (answers_.find(item_id) != answers_.end())
  {
    throw QuizError(QuizErrorCode::RepeatedAnswer,
                    "quiz item '" + std::string(item_id) + "' was already answered");
  }
  if (choice_index >= it->choices.size())
  {
    throw QuizError(QuizErrorCode::InvalidChoice, "choice " + std::to_string(choice_index) +
                                                    " out of range for '" + it->id + "'");
  }
  GradedAnswer answer{it->id, choice_index, choice_index == it->correct_index, it->attribute};
  answers_.emplace(it->id, answer);
  return answer;
}

std::vector<std::string> Quiz::pending_ids() const
{
  std::vector<std::string> ids;
  for (const auto& item : items_)
  {
    if (answers_.find(item.id) == answers_.end())
    {
      ids.push_back(item.id);
    }
  }
  return ids;
}

std::size_t Quiz::correct_count() const
{
  return static_cast<std::size_t>(std::count_if(
    answers_.begin(), answers_.end(), [](const auto& kv) { return kv.second.correct; }));
}

double Quiz::score() const
{
  if (items_.empty())
  {
    return 0.0;
  }
  return static_cast<double>(correct_count()) / static_cast<double>(items_.size());
}

}  // namespace palpatron
