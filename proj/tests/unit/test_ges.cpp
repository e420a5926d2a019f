#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "ips/agents/ges.hpp"
#include "ips/harness/config.hpp"
#include "ips/harness/episode.hpp"

using namespace ips;

namespace {

// Shortest open path from `start` over all permutations of the other nodes.
double brute_force(std::span<const Vec2> nodes, int start) {
  std::vector<int> rest;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (i != start) rest.push_back(i);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<int> tour{start};
    tour.insert(tour.end(), rest.begin(), rest.end());
    best = std::min(best, path_length(nodes, tour));
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

bool improvable(std::span<const Vec2> nodes, const std::vector<int>& tour) {
  const double len = path_length(nodes, tour);
  for (std::size_t i = 1; i + 1 < tour.size(); ++i)
    for (std::size_t j = i + 1; j < tour.size(); ++j) {
      std::vector<int> t = tour;
      std::reverse(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(j) + 1);
      if (path_length(nodes, t) < len - 1e-9) return true;
    }
  return false;
}

}  // namespace

TEST_CASE("a line of nodes is walked end to end") {
  for (int k : {1, 2, 5, 9}) {
    std::vector<Vec2> nodes;
    for (int i = 0; i < k; ++i) nodes.push_back({0.06 * i, 0.1});
    const auto tour = two_opt(nodes, nearest_neighbor_tour(nodes, 0));
    CHECK(path_length(nodes, tour) == doctest::Approx(0.06 * (k - 1)));
  }
}

TEST_CASE("the 3x3 lattice route is optimal from every start") {
  std::vector<Vec2> nodes;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) nodes.push_back({0.06 * i, 0.06 * j});
  for (int s = 0; s < 9; ++s) {
    const auto tour = two_opt(nodes, nearest_neighbor_tour(nodes, s));
    CHECK(tour.front() == s);
    CHECK(path_length(nodes, tour) == doctest::Approx(brute_force(nodes, s)));
  }
}

TEST_CASE("random 8-node routes stay within 15 percent of optimal") {
  Rng rng(21);
  double worst = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec2> nodes;
    for (int i = 0; i < 8; ++i) nodes.push_back({rng.uniform(), rng.uniform()});
    const auto tour = two_opt(nodes, nearest_neighbor_tour(nodes, 0));
    const double ratio = path_length(nodes, tour) / brute_force(nodes, 0);
    worst = std::max(worst, ratio);
    CHECK(ratio <= 1.15);
  }
  MESSAGE("worst ratio " << worst);
}

TEST_CASE("2-opt uncrosses, never lengthens, and ends locally optimal") {
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto fixed = two_opt(square, {0, 2, 1, 3});
  CHECK(path_length(square, fixed) == doctest::Approx(3.0));

  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec2> nodes;
    for (int i = 0; i < 15; ++i) nodes.push_back({rng.uniform(), rng.uniform()});
    std::vector<int> tour(nodes.size());
    std::iota(tour.begin(), tour.end(), 0);
    std::shuffle(tour.begin() + 1, tour.end(), rng);
    const auto better = two_opt(nodes, tour);
    CHECK(better.front() == tour.front());
    CHECK(path_length(nodes, better) <= path_length(nodes, tour) + 1e-12);
    CHECK_FALSE(improvable(nodes, better));
    CHECK(std::set<int>(better.begin(), better.end()).size() == nodes.size());
  }
  CHECK_THROWS_AS(two_opt(square, {0, 1, 1, 2}), ContractViolation);
  CHECK_THROWS_AS(two_opt(square, {0, 1, 2}), ContractViolation);
}

TEST_CASE("the sweep plan covers a centered lattice") {
  const double margin = 0.5 * std::hypot(0.03, 0.08);
  const GesPlan plan = ges_plan(0.6, {0.1, 0.5}, 0.06, 0.1, margin);
  CHECK(plan.nodes.size() == 81);
  CHECK(plan.route.size() == 81);
  CHECK(std::set<int>(plan.route.begin(), plan.route.end()).size() == 81);
  for (const Vec2& n : plan.nodes) {
    CHECK(n.x >= margin - 1e-12);
    CHECK(n.x <= 0.6 - margin + 1e-12);
  }
  const Vec2 first = plan.nodes[plan.route[0]];
  for (const Vec2& n : plan.nodes) CHECK(norm(first - Vec2{0.1, 0.5}) <= norm(n - Vec2{0.1, 0.5}) + 1e-12);
  CHECK(path_length(plan.nodes, plan.route) <= 80 * 0.06 * 1.15);
  CHECK_THROWS_AS(ges_plan(0.6, {}, 0.07, 0.1), ContractViolation);
}

TEST_CASE("following the plan visits every node with bounded steps") {
  GesPlan plan = ges_plan(0.3, {0.0, 0.0}, 0.06, 0.08, 0.04);
  GripperState g;
  g.position = {0.02, 0.03, 0.3};
  const GesConfig cfg;
  std::set<int> visited;
  for (int step = 0; step < 200; ++step) {
    const Action a = ges_step(plan, 0.0, g, cfg);
    if (a.terminate) break;
    CHECK(std::abs(a.dx) <= 0.06);
    CHECK(std::abs(a.dy) <= 0.06);
    CHECK(std::abs(a.dz) <= 0.06);
    g.position = g.position + Vec3{a.dx, a.dy, a.dz};
    for (std::size_t k = 0; k < plan.nodes.size(); ++k)
      if (norm(plan.nodes[k] - g.position.xy()) < 1e-9) visited.insert(static_cast<int>(k));
  }
  CHECK(visited.size() == plan.nodes.size());
  CHECK(plan.cursor == plan.route.size());
  CHECK(g.position.z == doctest::Approx(0.08));
}

TEST_CASE("sweep steps and stop rules") {
  GesPlan plan;
  plan.nodes = {{0.36, 0.3}};
  plan.route = {0};
  plan.sweep_height = 0.09;
  plan.spacing = 0.06;
  GripperState g;
  g.position = {0.3, 0.3, 0.1};
  const GesConfig cfg;
  const Action a = ges_step(plan, 0.1, g, cfg);
  CHECK(a.dx == doctest::Approx(0.06));
  CHECK(a.dy == doctest::Approx(0.0));
  CHECK(a.dz == doctest::Approx(-0.01));
  CHECK(a.droll == 0.0);
  CHECK(a.dyaw == 0.0);
  CHECK_FALSE(a.terminate);
  CHECK(ges_step(plan, 0.25, g, cfg).terminate);
  g.position = {0.36, 0.3, 0.09};
  CHECK(ges_step(plan, 0.0, g, cfg).terminate);
  CHECK(plan.cursor == 1);
}

TEST_CASE("the sweep height clears the lowest object top") {
  SceneState s;
  ObjectInstance a, b;
  a.position = {0.1, 0.1, 0.0};
  b.position = {0.3, 0.3, 0.03};
  s.objects = {a, b};
  CHECK(ges_sweep_height(s, GesConfig{}) == doctest::Approx(0.03 + 0.005 + 0.06));
  s.objects.clear();
  CHECK(ges_sweep_height(s, GesConfig{}) == doctest::Approx(0.065));
}

TEST_CASE("the sweeping agent uncovers buried targets") {
  const EpisodeConfig cfg = preset("interactive");
  GesAgent agent;
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) ok += is_success(run_episode(cfg, agent, seed).outcome);
  CHECK(ok >= 5);
}
