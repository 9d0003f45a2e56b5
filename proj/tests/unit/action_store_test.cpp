#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "robocoder/action_store.hpp"
#include "robocoder/benchmark.hpp"
#include "support.hpp"

namespace robocoder {
namespace {

using testing::catalog;

const LocalEmbedder& embedder() {
  static const LocalEmbedder e;
  return e;
}

ActionSpace seeded() { return seed_initial_space(seed_fixtures(testing::seeds()), catalog(), embedder()); }

ActionProgram move_cart(double to) {
  ActionProgram p;
  p.states = {{{0, to}}};
  return p;
}

ActionRecord learned(const std::string& entity, const std::string& text, ActionProgram program, int iteration = 1) {
  ActionRecord r;
  r.entity = entity;
  r.task_text = text;
  r.program = std::move(program);
  r.embedding = embedder().embed(text);
  r.provenance = Provenance::learned(iteration, "test");
  r.created_at_ms = 1000 + iteration;
  return r;
}

bool has_text(const SpaceView& v, const std::string& text) {
  return std::any_of(v.records.begin(), v.records.end(), [&](const RecordPtr& r) { return r->task_text == text; });
}

TEST(ActionStore, SeedCounts) {
  const auto space = seeded();
  EXPECT_EQ(space.size(), 24u);
  EXPECT_EQ(space.version(), 0u);
  const std::map<std::string, std::size_t> expected = {{"Human", 15},      {"Ant", 2},        {"Cartpole", 1},
                                                       {"SektionCabinet", 1}, {"FrankaPanda", 1}, {"Kinova", 1},
                                                       {"Anymal", 3}};
  for (const auto& [e, n] : expected) EXPECT_EQ(space.size(e), n) << e;
  const auto human = space.snapshot("Human");
  EXPECT_TRUE(has_text(human, "walk"));
  EXPECT_TRUE(has_text(human, "raise your right arm"));
  EXPECT_TRUE(has_text(space.snapshot("Anymal"), "bend left front knee"));
  for (const auto& r : human.records) {
    EXPECT_EQ(r->provenance, Provenance::seed());
    EXPECT_EQ(r->id.substr(r->id.size() - 3), "@v0");
  }
}

TEST(ActionStore, SeedingIdempotent) {
  EXPECT_TRUE(seeded().same_contents(seeded()));
}

TEST(ActionStore, SeedRejectsBadFixtures) {
  auto fixtures = seed_fixtures(testing::seeds());
  fixtures.push_back(fixtures.front());
  EXPECT_THROW(seed_initial_space(fixtures, catalog(), embedder()), StoreError);
  auto bad = seed_fixtures(testing::seeds());
  bad[0].program.states = {{{99, 1.0}}};
  EXPECT_THROW(seed_initial_space(bad, catalog(), embedder()), StoreError);
}

TEST(ActionStore, CommitNew) {
  auto space = seeded();
  const auto v = space.commit_passed({learned("Cartpole", "right move the slider", move_cart(2.0))}, catalog());
  EXPECT_EQ(v, 1u);
  EXPECT_EQ(space.size(), 25u);
  const auto* r = space.find("Cartpole", "right move the slider");
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->id, "Cartpole/right-move-the-slider@v1");
}

TEST(ActionStore, SnapshotCarriesSquaredNorms) {
  auto space = seeded();
  space.commit_passed({learned("Cartpole", "right move the slider", move_cart(2.0))}, catalog());
  for (const auto& entity : space.entities()) {
    const auto view = space.snapshot(entity);
    ASSERT_EQ(view.squared_norms.size(), view.records.size());
    for (std::size_t i = 0; i < view.records.size(); ++i) {
      EXPECT_EQ(view.squared_norms[i], squared_norm(view.records[i]->embedding.values));
    }
  }
}

TEST(ActionStore, CommitDuplicateReplacesInPlace) {
  auto space = seeded();
  const auto before = space.snapshot("Cartpole");
  ASSERT_EQ(before.records.size(), 1u);
  const auto text = before.records[0]->task_text;
  ActionProgram replacement;
  replacement.speeds[1] = 2.0;
  replacement.states = {{{1, -1.0}}};
  space.commit_passed({learned("Cartpole", text, replacement, 3)}, catalog());
  EXPECT_EQ(space.size(), 24u);
  const auto after = space.snapshot("Cartpole");
  ASSERT_EQ(after.records.size(), 1u);
  EXPECT_EQ(after.records[0]->program, replacement);
  EXPECT_EQ(after.records[0]->provenance, Provenance::learned(3, "test"));
  EXPECT_NE(before.records[0]->program, replacement);
}

TEST(ActionStore, CommitEmptyBumpsVersion) {
  auto space = seeded();
  const auto copy = space;
  EXPECT_EQ(space.commit_passed({}, catalog()), 1u);
  EXPECT_EQ(space.size(), 24u);
  EXPECT_FALSE(space.same_contents(copy));
  for (const auto& e : copy.entities()) {
    const auto a = copy.snapshot(e), b = space.snapshot(e);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(*a.records[i], *b.records[i]);
  }
}

TEST(ActionStore, CommitValidatesAll) {
  auto space = seeded();
  auto bad = learned("Cartpole", "nonsense", move_cart(1.0));
  bad.program.states = {{{7, 1.0}}};
  EXPECT_THROW(space.commit_passed({learned("Cartpole", "fine", move_cart(1.0)), bad}, catalog()), StoreError);
  EXPECT_EQ(space.size(), 24u);
  EXPECT_EQ(space.version(), 0u);
  auto wrong_dim = learned("Cartpole", "short", move_cart(1.0));
  wrong_dim.embedding.values.resize(3);
  EXPECT_THROW(space.commit_passed({wrong_dim}, catalog()), StoreError);
  EXPECT_THROW(space.commit_passed({learned("Robot", "x", move_cart(1.0))}, catalog()), StoreError);
}

TEST(ActionStore, SnapshotIsolation) {
  auto space = seeded();
  const auto snap = space.snapshot("Cartpole");
  const auto ids_before = snap.records.front()->id;
  EXPECT_EQ(snap.version, space.version());
  space.commit_passed({learned("Cartpole", "left move the slider", move_cart(-2.0)),
                       learned("Cartpole", snap.records.front()->task_text, move_cart(3.0))},
                      catalog());
  EXPECT_EQ(snap.records.size(), 1u);
  EXPECT_EQ(snap.records.front()->id, ids_before);
  EXPECT_EQ(snap.version, 0u);
  EXPECT_EQ(space.snapshot("Cartpole").records.size(), 2u);
}

TEST(ActionStore, SnapshotIsolationProperty) {
  std::mt19937_64 rng(8);
  auto space = seeded();
  std::vector<std::pair<SpaceView, std::vector<ActionRecord>>> taken;
  const auto names = catalog().names();
  for (int round = 0; round < 40; ++round) {
    const auto& e = names[rng() % names.size()];
    auto view = space.snapshot(e);
    std::vector<ActionRecord> copy;
    for (const auto& r : view.records) copy.push_back(*r);
    taken.emplace_back(std::move(view), std::move(copy));
    std::vector<ActionRecord> batch;
    const auto n = rng() % 4;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& target = names[rng() % names.size()];
      ActionProgram p;
      p.states = {{{0, catalog().at(target).dofs[0].clamp(0.1 * static_cast<double>(rng() % 10))}}};
      batch.push_back(learned(target, "skill " + std::to_string(rng() % 12), p, round));
    }
    space.commit_passed(batch, catalog());
  }
  for (const auto& [view, copy] : taken) {
    ASSERT_EQ(view.records.size(), copy.size());
    for (std::size_t i = 0; i < copy.size(); ++i) ASSERT_EQ(*view.records[i], copy[i]);
  }
}

TEST(ActionStore, EmptyPartitionSnapshot) {
  const ActionSpace empty;
  const auto v = empty.snapshot("Human");
  EXPECT_TRUE(v.records.empty());
  EXPECT_EQ(v.entity, "Human");
}

TEST(ActionStore, EmbeddingConsistency) {
  auto space = seeded();
  space.commit_passed({learned("Ant", "jump", ActionProgram{})}, catalog());
  EXPECT_TRUE(embedding_mismatches(space, embedder()).empty());
  EXPECT_EQ(embedding_mismatches(space, LocalEmbedder(384 - 1)).size(), space.size());
}

TEST(ActionStore, Slugify) {
  EXPECT_EQ(slugify("raise your left arm"), "raise-your-left-arm");
  EXPECT_EQ(slugify("  Open the LEFT door!! "), "open-the-left-door");
}

TEST(StoreLog, SaveLoadRoundTrip) {
  testing::TempDir dir;
  auto space = seeded();
  space.commit_passed({learned("Cartpole", "right move the slider", move_cart(2.0))}, catalog());
  store_log::save(space, dir / "s.jsonl", embedder().describe());
  const auto loaded = store_log::load(dir / "s.jsonl", catalog());
  EXPECT_TRUE(loaded.same_contents(space));
  EXPECT_EQ(loaded.version(), space.version());
}

TEST(StoreLog, AppendedCommitsReplay) {
  testing::TempDir dir;
  const auto path = dir / "s.jsonl";
  auto space = seeded();
  store_log::save(space, path, embedder().describe());
  for (int i = 1; i <= 3; ++i) {
    std::vector<ActionRecord> batch = {learned("Cartpole", "slide", move_cart(0.5 * i), i)};
    const auto v = space.commit_passed(batch, catalog());
    batch[0].id = space.find("Cartpole", "slide")->id;
    store_log::append_commit(path, batch, v, space.dimension(), embedder().describe());
  }
  const auto loaded = store_log::load(path, catalog());
  EXPECT_TRUE(loaded.same_contents(space));
  EXPECT_EQ(loaded.version(), 3u);
  EXPECT_EQ(loaded.find("Cartpole", "slide")->program, move_cart(1.5));
}

// Replays the log by hand: last program per (entity, text) wins.
std::map<std::pair<std::string, std::string>, std::string> replay_oracle(const std::filesystem::path& path) {
  std::map<std::pair<std::string, std::string>, std::string> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j.value("type", "") != "record") continue;
    const auto& r = j["record"];
    out[{r["entity"].get<std::string>(), r["task_text"].get<std::string>()}] = r["program"].get<std::string>();
  }
  return out;
}

TEST(StoreLog, LaterProgramWinsOracle) {
  testing::TempDir dir;
  const auto path = dir / "s.jsonl";
  auto space = seeded();
  store_log::save(space, path, embedder().describe());
  std::mt19937_64 rng(4);
  for (int i = 1; i <= 10; ++i) {
    std::vector<ActionRecord> batch;
    for (int j = 0; j < 3; ++j) {
      batch.push_back(learned("Cartpole", "skill " + std::to_string(rng() % 4), move_cart(0.1 * static_cast<double>(rng() % 30)), i));
    }
    const auto v = space.commit_passed(batch, catalog());
    for (auto& r : batch) r.id = space.find(r.entity, r.task_text)->id;
    store_log::append_commit(path, batch, v, space.dimension(), embedder().describe());
  }
  const auto loaded = store_log::load(path, catalog());
  const auto oracle = replay_oracle(path);
  std::size_t n = 0;
  for (const auto& e : loaded.entities()) {
    for (const auto& r : loaded.snapshot(e).records) {
      ASSERT_EQ(serialize_program(r->program), oracle.at({r->entity, r->task_text}));
      ++n;
    }
  }
  EXPECT_EQ(n, oracle.size());
}

TEST(StoreLog, TruncatedFinalLine) {
  testing::TempDir dir;
  auto space = seeded();
  store_log::save(space, dir / "s.jsonl", embedder().describe());
  auto text = read_text_file(dir / "s.jsonl");
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  text.resize(text.size() - 10);
  try {
    store_log::load_text(text, catalog());
    FAIL();
  } catch (const StoreError& e) {
    EXPECT_NE(std::string(e.what()).find("line " + std::to_string(lines)), std::string::npos) << e.what();
  }
}

TEST(StoreLog, CorruptLineNamed) {
  testing::TempDir dir;
  auto space = seeded();
  store_log::save(space, dir / "s.jsonl", embedder().describe());
  auto text = read_text_file(dir / "s.jsonl");
  const auto second = text.find('\n') + 1;
  text.insert(second, "not json\n");
  try {
    store_log::load_text(text, catalog());
    FAIL();
  } catch (const StoreError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(store_log::load_text("", catalog()), StoreError);
}

}  // namespace
}  // namespace robocoder
