#include "palpatron/error.hpp"
#include "palpatron/quiz.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace palpatron
{
namespace
{

std::size_t index_of(const QuizItem& item, std::string_view text)
{
  const auto it = std::find(item.choices.begin(), item.choices.end(), text);
  return static_cast<std::size_t>(it - item.choices.begin());
}

const QuizItem& item_for(const std::vector<QuizItem>& bank, QuizAttribute attribute)
{
  return *std::find_if(bank.begin(), bank.end(),
                       [&](const QuizItem& i) { return i.attribute == attribute; });
}

TEST(QuizBank, EveryScenarioHasOneItemPerAttribute)
{
  for (const Scenario s : kAllScenarios)
  {
    const auto bank = quiz_bank(s);
    ASSERT_EQ(bank.size(), 3U) << to_string(s);
    for (const auto a : {QuizAttribute::Color, QuizAttribute::Consistency, QuizAttribute::Diagnosis})
    {
      EXPECT_EQ(std::count_if(bank.begin(), bank.end(), [&](const QuizItem& i) { return i.attribute == a; }),
                1);
    }
    for (const auto& item : bank)
    {
      EXPECT_LT(item.correct_index, item.choices.size());
    }
  }
}

TEST(QuizBank, KeyedToExpectedFindings)
{
  for (const Scenario s : kAllScenarios)
  {
    const auto m = testing::model(s, 5);
    const ClinicalFindings findings = expected_findings(*m);
    const auto bank = quiz_bank(s);
    const auto& color = item_for(bank, QuizAttribute::Color);
    const auto& consistency = item_for(bank, QuizAttribute::Consistency);
    const auto& diagnosis = item_for(bank, QuizAttribute::Diagnosis);
    EXPECT_EQ(color.choices[color.correct_index], findings.color);
    EXPECT_EQ(consistency.choices[consistency.correct_index], findings.consistency);
    EXPECT_EQ(diagnosis.choices[diagnosis.correct_index], findings.diagnosis);
  }
}

TEST(QuizBank, StatedAnswers)
{
  const auto cirrhotic = quiz_bank(Scenario::Cirrhotic);
  const auto& diagnosis = item_for(cirrhotic, QuizAttribute::Diagnosis);
  EXPECT_EQ(diagnosis.correct_index, index_of(diagnosis, "cirrhosis"));

  const auto healthy = quiz_bank(Scenario::Healthy);
  const auto& consistency = item_for(healthy, QuizAttribute::Consistency);
  EXPECT_EQ(consistency.correct_index, index_of(consistency, "smooth, no irregularities"));

  const auto hepatic = quiz_bank(Scenario::Hepatic);
  const auto& color = item_for(hepatic, QuizAttribute::Color);
  EXPECT_EQ(color.correct_index, index_of(color, "pale"));
}

TEST(QuizBank, LoadsIdenticallyEachTime)
{
  for (const Scenario s : kAllScenarios)
  {
    EXPECT_EQ(quiz_bank(s), quiz_bank(s));
  }
}

TEST(QuizBank, MalformedBanksRejected)
{
  EXPECT_THROW(parse_quiz_bank("{}"), ConfigError);
  EXPECT_THROW(parse_quiz_bank("not json"), ConfigError);
  EXPECT_THROW(parse_quiz_bank(R"([{"id":"a","attribute":"color","prompt":"p","choices":["x"],"correct_index":3}])"),
               ConfigError);
  EXPECT_THROW(parse_quiz_bank(R"([{"id":"a","attribute":"smell","prompt":"p","choices":["x"],"correct_index":0}])"),
               ConfigError);
  const auto ok =
    parse_quiz_bank(R"([{"id":"a","attribute":"color","prompt":"p","choices":["x","y"],"correct_index":1}])");
  ASSERT_EQ(ok.size(), 1U);
  EXPECT_EQ(ok[0].choices[1], "y");
}

TEST(Quiz, GradingAndScore)
{
  Quiz quiz(quiz_bank(Scenario::Cirrhotic));
  const auto& items = quiz.items();
  const GradedAnswer right = quiz.submit(items[0].id, items[0].correct_index);
  EXPECT_TRUE(right.correct);
  const std::size_t wrong_choice = (items[1].correct_index + 1) % items[1].choices.size();
  EXPECT_FALSE(quiz.submit(items[1].id, wrong_choice).correct);
  EXPECT_EQ(quiz.answered_count(), 2U);
  EXPECT_EQ(quiz.pending_ids(), std::vector<std::string>{items[2].id});
  EXPECT_FALSE(quiz.complete());
  quiz.submit(items[2].id, items[2].correct_index);
  EXPECT_TRUE(quiz.complete());
  EXPECT_EQ(quiz.correct_count(), 2U);
  EXPECT_DOUBLE_EQ(quiz.score(), 2.0 / 3.0);
}

TEST(Quiz, Errors)
{
  Quiz quiz(quiz_bank(Scenario::Healthy));
  const auto id = quiz.items()[0].id;
  auto code_of = [&](auto&& f) {
    try
    {
      f();
    }
    catch (const QuizError& e)
    {
      return std::optional<QuizErrorCode>(e.code());
    }
    return std::optional<QuizErrorCode>();
  };
  EXPECT_EQ(code_of([&] { quiz.submit("nope", 0); }), QuizErrorCode::UnknownItem);
  EXPECT_EQ(code_of([&] { quiz.submit(id, 99); }), QuizErrorCode::InvalidChoice);
  quiz.submit(id, 0);
  EXPECT_EQ(code_of([&] { quiz.submit(id, 1); }), QuizErrorCode::RepeatedAnswer);
  EXPECT_EQ(quiz.answered_count(), 1U);
  EXPECT_EQ(to_string(QuizErrorCode::RepeatedAnswer), "repeated_answer");
}

}  // namespace
}  // namespace palpatron
