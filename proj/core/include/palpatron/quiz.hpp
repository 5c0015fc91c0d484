#pragma once

#include "palpatron/types.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace palpatron
{

enum class QuizAttribute : std::uint8_t
{
  Color,
  Consistency,
  Diagnosis,
};

std::string_view to_string(QuizAttribute attribute);
std::optional<QuizAttribute> parse_quiz_attribute(std::string_view text);

struct QuizItem
{
  std::string id;
  std::string prompt;
  std::vector<std::string> choices;
  std::size_t correct_index = 0;
  QuizAttribute attribute = QuizAttribute::Diagnosis;

  friend bool operator==(const QuizItem&, const QuizItem&) = default;
};

/// Parses a JSON array of quiz items. Throws ConfigError on malformed banks.
std::vector<QuizItem> parse_quiz_bank(std::string_view json_text);

/// The bank shipped for a scenario (compiled in from assets/quiz).
std::vector<QuizItem> quiz_bank(Scenario scenario);

enum class QuizErrorCode : std::uint8_t
{
  UnknownItem,
  RepeatedAnswer,
  WrongPhase,
  InvalidChoice,
};

std::string_view to_string(QuizErrorCode code);

class QuizError : public std::runtime_error
{
public:
  QuizError(QuizErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code)
  {
  }

  QuizErrorCode code() const noexcept { return code_; }

private:
  QuizErrorCode code_;
};

struct GradedAnswer
{
  std::string item_id;
  std::size_t choice_index = 0;
  bool correct = false;
  QuizAttribute attribute = QuizAttribute::Diagnosis;
};

/// Answer bookkeeping for one bank. Each item may be answered once.
class Quiz
{
public:
  explicit Quiz(std::vector<QuizItem> items);

  /// Grades an answer; throws QuizError for unknown items, repeats and bad choices.
  GradedAnswer submit(std::string_view item_id, std::size_t choice_index);

  const std::vector<QuizItem>& items() const { return items_; }
  std::vector<std::string> pending_ids() const;
  std::size_t answered_count() const { return answers_.size(); }
  std::size_t correct_count() const;
  bool complete() const { return answers_.size() == items_.size(); }

  /// answered-correct / total items.
  double score() const;

private:
  std::vector<QuizItem> items_;
  std::map<std::string, GradedAnswer, std::less<>> answers_;
};

}  // namespace palpatron
