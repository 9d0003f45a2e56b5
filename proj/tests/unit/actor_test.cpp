#include <gtest/gtest.h>

#include "oracles.hpp"
#include "robocoder/actor.hpp"
#include "robocoder/evaluator.hpp"
#include "support.hpp"

namespace robocoder {
namespace {

using testing::entity;

const std::string kProgram = R"({"initial_dof_position": {}, "speeds": {"0": 1.0}, "state_destination": [{"0": 2.0}]})";

SearchOutcome related_outcome(const std::vector<std::pair<std::string, double>>& items, const std::string& e = "Cartpole") {
  SearchOutcome out;
  out.kind = items.empty() ? SearchKind::Empty : SearchKind::Related;
  for (const auto& [text, score] : items) {
    auto r = std::make_shared<ActionRecord>();
    r->entity = e;
    r->task_text = text;
    r->program.states = {{{0, score}}};
    out.records.push_back(r);
    out.scores.push_back(score);
  }
  return out;
}

FeedbackMessage failing_feedback(const std::string& task) {
  return compose_feedback({false, "dof 0 (slider_to_cart) net change +0.00, required at least +0.50", "move it"}, task);
}

TEST(BuildPrompt, RelatedInScoreOrder) {
  const auto outcome = related_outcome({{"a", 0.9}, {"b", 0.7}, {"c", 0.6}});
  const auto p = build_prompt("right move the slider", outcome, entity("Cartpole"), std::nullopt, "SYS");
  ASSERT_EQ(p.related_actions.size(), 3u);
  EXPECT_EQ(p.related_actions[0].task_text, "a");
  EXPECT_EQ(p.related_actions[2].task_text, "c");
  const auto msg = p.user_message();
  EXPECT_LT(msg.find("### a"), msg.find("### b"));
  EXPECT_LT(msg.find("### b"), msg.find("### c"));
  EXPECT_EQ(p.system, "SYS");
}

TEST(BuildPrompt, Feedback) {
  const auto p = build_prompt("right move the slider", related_outcome({}), entity("Cartpole"),
                              failing_feedback("right move the slider"), "SYS", 2);
  EXPECT_NE(p.user_message().find("Your current action code does not fulfill the task: right move the slider"),
            std::string::npos);
  EXPECT_EQ(p.attempt, 2);
}

TEST(BuildPrompt, EmptyOutcome) {
  const auto p = build_prompt("walk", related_outcome({}), entity("Cartpole"), std::nullopt, "SYS");
  EXPECT_TRUE(p.related_actions.empty());
  const auto msg = p.user_message();
  EXPECT_EQ(msg.find("Related actions"), std::string::npos);
  EXPECT_NE(msg.find(dof_description(entity("Cartpole"))), std::string::npos);
  EXPECT_NE(msg.find("Task: walk"), std::string::npos);
}

TEST(BuildPrompt, TemplateOnlyOneRecord) {
  auto outcome = related_outcome({{"closest", 0.2}});
  outcome.kind = SearchKind::TemplateOnly;
  EXPECT_EQ(build_prompt("x", outcome, entity("Cartpole"), std::nullopt, "").related_actions.size(), 1u);
}

TEST(BuildPrompt, Errors) {
  auto exact = related_outcome({{"a", 0.995}});
  exact.kind = SearchKind::ExactMatch;
  EXPECT_THROW(build_prompt("a", exact, entity("Cartpole"), std::nullopt, ""), std::invalid_argument);
  EXPECT_THROW(build_prompt("a", related_outcome({{"a", 0.8}}, "Ant"), entity("Cartpole"), std::nullopt, ""),
               std::invalid_argument);
}

TEST(BuildPrompt, Deterministic) {
  const auto outcome = related_outcome({{"a", 0.9}, {"b", 0.7}});
  const auto fb = failing_feedback("t");
  const auto a = build_prompt("t", outcome, entity("Cartpole"), fb, "S", 3);
  const auto b = build_prompt("t", outcome, entity("Cartpole"), fb, "S", 3);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.user_message(), b.user_message());
}

TEST(SystemPrompt, ShippedAsset) {
  const auto s = load_actor_system_prompt(default_data_dir());
  for (const auto* key : {"initial_dof_position", "speeds", "state_destination", "repeat"}) {
    EXPECT_NE(s.find(key), std::string::npos) << key;
  }
}

TEST(Scripted, KeyedByTask) {
  ScriptedProvider p({{"Cartpole", "right move the slider", {}, kProgram}});
  const auto prompt = build_prompt("right move the slider", related_outcome({}), entity("Cartpole"), std::nullopt, "");
  EXPECT_EQ(p.generate(prompt), kProgram);
  EXPECT_EQ(p.call_count(), 1u);
  auto other = prompt;
  other.task = "jump";
  EXPECT_EQ(parse_program(p.generate(other), entity("Cartpole")).index(), 1u);
  EXPECT_EQ(p.call_count(), 2u);
}

TEST(Scripted, Conditions) {
  ScriptCondition later;
  later.min_attempt = 2;
  ScriptCondition needs;
  needs.requires_related = {"a"};
  ScriptedProvider p({{"Cartpole", "t", later, "late"}, {"Cartpole", "t", needs, "related"}, {"Cartpole", "t", {}, "default"}});
  auto prompt = build_prompt("t", related_outcome({}), entity("Cartpole"), std::nullopt, "");
  EXPECT_EQ(p.generate(prompt), "default");
  prompt.attempt = 2;
  EXPECT_EQ(p.generate(prompt), "late");
  auto with_related = build_prompt("t", related_outcome({{"a", 0.8}}), entity("Cartpole"), std::nullopt, "");
  EXPECT_EQ(p.generate(with_related), "related");
}

TEST(Scripted, ParseRules) {
  const auto rules = ScriptedProvider::parse_rules(
      "# comment\n"
      R"({"entity": "Cartpole", "task": "t", "program": {"state_destination": [{"0": 1}]}, "when": {"min_attempt": 2, "with_feedback": true}})"
      "\n",
      "inline");
  ASSERT_EQ(rules.size(), 1u);
  EXPECT_EQ(rules[0].when.min_attempt, 2);
  EXPECT_EQ(rules[0].when.with_feedback, true);
  EXPECT_THROW(ScriptedProvider::parse_rules("{\"entity\": \"x\"}\n", "inline"), std::runtime_error);
  EXPECT_THROW(ScriptedProvider::parse_rules("nope\n", "inline"), std::runtime_error);
}

TEST(KthTry, CallSequence) {
  KthTryProvider p({{{"Cartpole", "t"}, kProgram}}, 3);
  const auto prompt = build_prompt("t", related_outcome({}), entity("Cartpole"), std::nullopt, "");
  const auto& cp = entity("Cartpole");
  EXPECT_TRUE(std::holds_alternative<ParseError>(parse_program(p.generate(prompt), cp)));
  EXPECT_TRUE(std::holds_alternative<ParseError>(parse_program(p.generate(prompt), cp)));
  EXPECT_EQ(p.generate(prompt), kProgram);
  EXPECT_EQ(p.generate(prompt), kProgram);
  EXPECT_EQ(p.call_count(), 4u);
  EXPECT_THROW(KthTryProvider({}, 0), std::invalid_argument);
}

TEST(KthTry, PerTaskCounters) {
  KthTryProvider p({{{"Cartpole", "a"}, kProgram}, {{"Cartpole", "b"}, kProgram}}, 2);
  const auto pa = build_prompt("a", related_outcome({}), entity("Cartpole"), std::nullopt, "");
  const auto pb = build_prompt("b", related_outcome({}), entity("Cartpole"), std::nullopt, "");
  EXPECT_NE(p.generate(pa), kProgram);
  EXPECT_NE(p.generate(pb), kProgram);
  EXPECT_EQ(p.generate(pa), kProgram);
  EXPECT_EQ(p.generate(pb), kProgram);
}

TEST(Obtain, FirstTry) {
  ScriptedProvider p({{"Cartpole", "t", {}, kProgram}});
  const auto r = obtain_program("t", related_outcome({}), entity("Cartpole"), std::nullopt, p, "");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.calls, 1u);
  EXPECT_EQ(p.call_count(), 1u);
}

TEST(Obtain, GarbageTwiceThenValid) {
  ScriptCondition two;
  two.min_format_errors = 2;
  ScriptedProvider p({{"Cartpole", "t", two, kProgram}, {"Cartpole", "t", {}, "sorry, no code"}});
  const auto r = obtain_program("t", related_outcome({}), entity("Cartpole"), std::nullopt, p, "");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.calls, 3u);
  EXPECT_EQ(p.call_count(), 3u);
}

TEST(Obtain, GarbageThreeTimes) {
  ScriptedProvider p({{"Cartpole", "t", {}, "sorry, no code"}});
  const auto r = obtain_program("t", related_outcome({}), entity("Cartpole"), std::nullopt, p, "");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(std::get<ActorFailure>(r.outcome).reason, "no action block found");
  EXPECT_EQ(r.calls, 3u);
}

TEST(Obtain, ParseErrorFedBack) {
  struct Recorder : ActorProvider {
    std::vector<PromptBundle> seen;
    std::string describe() const override { return "recorder"; }
    std::string complete(const PromptBundle& p) override {
      seen.push_back(p);
      return "garbage";
    }
  } rec;
  obtain_program("t", related_outcome({}), entity("Cartpole"), std::nullopt, rec, "");
  ASSERT_EQ(rec.seen.size(), 3u);
  EXPECT_TRUE(rec.seen[0].format_errors.empty());
  EXPECT_EQ(rec.seen[2].format_errors.size(), 2u);
  EXPECT_NE(rec.seen[1].user_message().find("no action block found"), std::string::npos);
}

TEST(Obtain, ProviderExceptionIsFailure) {
  struct Failing : ActorProvider {
    std::string describe() const override { return "failing"; }
    std::string complete(const PromptBundle&) override { throw std::runtime_error("boom"); }
  } f;
  const auto r = obtain_program("t", related_outcome({}), entity("Cartpole"), std::nullopt, f, "");
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(std::get<ActorFailure>(r.outcome).provider_error);
  EXPECT_EQ(f.call_count(), 1u);
}

}  // namespace
}  // namespace robocoder
