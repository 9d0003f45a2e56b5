#include <gtest/gtest.h>

#include <cmath>

#include "robocoder/sim.hpp"
#include "robocoder/trajectory_io.hpp"
#include "support.hpp"

namespace robocoder {
namespace {

using testing::entity;

ActionProgram single(long long dof, double from, double to, double speed) {
  ActionProgram p;
  p.initial_positions[dof] = from;
  p.speeds[dof] = speed;
  p.states = {{{dof, to}}};
  return p;
}

// Steps for one DOF by walking it one tick at a time.
std::size_t walked_steps(double distance, double speed, double dt) {
  std::size_t steps = 0;
  double covered = 0.0;
  while (covered < distance) {
    covered = static_cast<double>(++steps) * speed * dt;
  }
  return steps;
}

TEST(Sim, CartpoleArrival) {
  const auto& cp = entity("Cartpole");
  const auto r = simulate(single(0, 0.0, 2.0, 1.0), cp, SimConfig{});
  ASSERT_TRUE(r.ok());
  const auto& t = *r.trajectory;
  ASSERT_EQ(t.keyframes.size(), 1u);
  EXPECT_EQ(t.keyframes[0].step_index, 120u);
  EXPECT_EQ(t.step_count(), 120u);
  EXPECT_NEAR(t.poses.back()[0], 2.0, 1e-3);
  EXPECT_EQ(static_cast<std::size_t>(std::ceil(2.0 / (1.0 / 60.0))), 120u);
  const auto kf = keyframes(t);
  ASSERT_EQ(kf.size(), 2u);
  EXPECT_EQ(kf[0], t.poses[0]);
  EXPECT_EQ(kf[1], t.poses[120]);
}

TEST(Sim, ClampedPlateau) {
  ActionProgram p;
  p.states = {{{0, 1.5}}};
  const auto r = simulate(p, entity("Human"));
  ASSERT_TRUE(r.ok());
  const auto& t = *r.trajectory;
  ASSERT_EQ(t.keyframes.size(), 1u);
  EXPECT_LE(std::fabs(t.poses[t.keyframes[0].step_index][0] - 0.79), 1e-3);
  for (const auto& pose : t.poses) EXPECT_LE(pose[0], 0.79);
  // 0.79 at the default speed of 1.0.
  EXPECT_EQ(t.keyframes[0].step_index, static_cast<std::size_t>(std::ceil(0.79 * 60.0)));
}

TEST(Sim, NoOp) {
  const auto r = simulate(ActionProgram{}, entity("Human"));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.trajectory->poses.size(), 1u);
  EXPECT_TRUE(r.trajectory->keyframes.empty());
  EXPECT_EQ(keyframes(*r.trajectory), std::vector<Pose>{Pose(21, 0.0)});
}

TEST(Sim, InvalidDof) {
  ActionProgram p;
  p.states = {{{99, 0.5}}};
  const auto r = simulate(p, entity("Human"));
  EXPECT_EQ(r.return_code, 1);
  ASSERT_TRUE(r.error);
  EXPECT_FALSE(r.trajectory);
  EXPECT_EQ(r.error->kind, SimErrorKind::InvalidDof);
}

TEST(Sim, OtherErrors) {
  const auto& cp = entity("Cartpole");
  auto bad_speed = single(0, 0.0, 1.0, -1.0);
  EXPECT_EQ(simulate(bad_speed, cp).error->kind, SimErrorKind::BadSpeed);
  auto non_finite = single(0, 0.0, std::nan(""), 1.0);
  EXPECT_EQ(simulate(non_finite, cp).error->kind, SimErrorKind::NonFinite);
  auto slow = single(1, 0.0, 1000.0, 0.01);
  EXPECT_EQ(simulate(slow, cp).error->kind, SimErrorKind::Timeout);
  auto repeat = single(0, 0.0, 1.0, 1.0);
  repeat.repeat = 0;
  EXPECT_EQ(simulate(repeat, cp).error->kind, SimErrorKind::InvalidRepeat);
}

TEST(Sim, TwoStates) {
  ActionProgram p;
  p.states = {{{0, 1.0}}, {{0, -1.0}}};
  const auto r = simulate(p, entity("Cartpole"));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(keyframes(*r.trajectory).size(), 3u);
  EXPECT_EQ(r.trajectory->keyframes[0].step_index, 60u);
  EXPECT_EQ(r.trajectory->keyframes[1].step_index, 180u);
}

TEST(Sim, RepeatCycles) {
  ActionProgram p;
  p.speeds[0] = 2.0;
  p.states = {{{0, 0.5}}, {{0, -0.5}}};
  p.repeat = 3;
  const auto r = simulate(p, entity("Cartpole"));
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.trajectory->keyframes.size(), 6u);
  EXPECT_EQ(r.trajectory->keyframes[5].cycle_index, 2u);
  EXPECT_EQ(r.trajectory->keyframes[5].state_index, 1u);
}

TEST(Sim, UntargetedDofsHold) {
  ActionProgram p;
  p.initial_positions = {{0, 1.0}, {1, 0.3}};
  p.states = {{{0, -1.0}}};
  const auto r = simulate(p, entity("Cartpole"));
  ASSERT_TRUE(r.ok());
  for (const auto& pose : r.trajectory->poses) EXPECT_EQ(pose[1], 0.3);
}

TEST(Sim, UnlimitedDofNotClamped) {
  ActionProgram p;
  p.speeds[1] = 6.0;
  p.states = {{{1, 10.0}}};
  const auto r = simulate(p, entity("Cartpole"));
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.trajectory->poses.back()[1], 10.0, 1e-9);
}

TEST(Sim, ArrivalOracleProperty) {
  testing::ProgramGenerator gen(7);
  std::size_t checked = 0;
  for (const auto& name : testing::catalog().names()) {
    const auto& e = entity(name);
    for (int i = 0; i < 400; ++i) {
      const auto dof = static_cast<std::size_t>(gen.integer(0, static_cast<int>(e.dof_count()) - 1));
      const auto& d = e.dofs[dof];
      const double lo = d.lower_limit, hi = d.upper_limit;
      const double from = gen.uniform(lo, hi), to = gen.uniform(lo, hi);
      const double speed = gen.uniform(0.2, 4.0);
      SimConfig cfg;
      cfg.dt = i % 3 == 0 ? 1.0 / 120.0 : 1.0 / 60.0;
      const double distance = std::fabs(to - from);
      const double ticks = distance / (speed * cfg.dt);
      if (distance <= cfg.tolerance || std::fabs(ticks - std::round(ticks)) < 1e-6) continue;
      const auto r = simulate(single(static_cast<long long>(dof), from, to, speed), e, cfg);
      ASSERT_TRUE(r.ok());
      const auto expected = static_cast<std::size_t>(std::ceil(ticks));
      EXPECT_EQ(r.trajectory->keyframes.at(0).step_index, expected);
      EXPECT_EQ(walked_steps(distance, speed, cfg.dt), expected);
      EXPECT_EQ(arrival_steps(distance, speed, cfg), expected);
      EXPECT_EQ(r.trajectory->poses.back()[dof], to);
      ++checked;
    }
  }
  EXPECT_GT(checked, 2000u);
}

TEST(Sim, LimitSafetyAndDeterminismFuzz) {
  testing::ProgramGenerator gen(2024);
  const auto names = testing::catalog().names();
  std::size_t ok = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto& e = entity(names[static_cast<std::size_t>(i) % names.size()]);
    const auto p = gen.program(e);
    const auto r = simulate(p, e);
    ASSERT_EQ(simulate(p, e), r);
    if (!r.ok()) continue;
    ++ok;
    const auto& t = *r.trajectory;
    for (std::size_t k = 1; k < t.keyframes.size(); ++k) ASSERT_LT(t.keyframes[k - 1].step_index, t.keyframes[k].step_index);
    for (const auto& pose : t.poses) {
      for (const auto& d : e.dofs) {
        if (!d.limited) continue;
        ASSERT_GE(pose[d.index], d.lower_limit) << e.name << " " << d.name;
        ASSERT_LE(pose[d.index], d.upper_limit) << e.name << " " << d.name;
      }
    }
  }
  EXPECT_GT(ok, 9000u);
}

TEST(Sim, TrajectoryExportRoundTrip) {
  ActionProgram p;
  p.states = {{{0, 1.0}}, {{1, -0.5}}};
  SimConfig cfg;
  const auto r = simulate(p, entity("Cartpole"), cfg);
  ASSERT_TRUE(r.ok());
  const auto loaded = import_trajectory(export_trajectory(*r.trajectory, cfg));
  EXPECT_EQ(loaded.trajectory, *r.trajectory);
  EXPECT_EQ(loaded.config.max_steps, cfg.max_steps);
  EXPECT_THROW(import_trajectory("# trajectory v1\n# dofs: 2\n1 2 3\n"), std::runtime_error);
}

}  // namespace
}  // namespace robocoder
