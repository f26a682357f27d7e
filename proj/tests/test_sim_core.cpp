#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cmppi/costs.hpp"
#include "cmppi/env_io.hpp"
#include "cmppi/environment.hpp"
#include "cmppi/rng.hpp"

using namespace cmppi;

namespace {

State random_state(SplitMix64& eng, double lo, double hi) {
    std::uniform_real_distribution<double> pos(lo, hi);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    return State{pos(eng), pos(eng), wrap_angle(ang(eng))};
}

OccupancyGrid random_grid(SplitMix64& eng, int w, int h, double occupied_fraction) {
    OccupancyGrid g = OccupancyGrid::filled(w, h, Cell::Free);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& c : g.cells) {
        const double x = u(eng);
        if (x < occupied_fraction)
            c = Cell::Occupied;
        else if (x < occupied_fraction + 0.15)
            c = Cell::Unknown;
    }
    return g;
}

// Independent re-implementation of the Euler chain for the rollout oracle.
std::vector<State> naive_rollout(State s, const ControlSequence& seq, double dt) {
    std::vector<State> out{s};
    for (const auto& u : seq.u) {
        State n;
        n.x = s.x + u.v * std::cos(s.theta) * dt;
        n.y = s.y + u.v * std::sin(s.theta) * dt;
        n.theta = wrap_angle(s.theta + u.omega * dt);
        out.push_back(n);
        s = n;
    }
    return out;
}

// Exhaustive scan over every cell (plus a ring of out-of-bounds indices).
bool collides_oracle(const OccupancyGrid& g, const State& s, double r) {
    if (!g.point_in_bounds(s.x, s.y)) return true;
    if (g.at_point(s.x, s.y) == Cell::Occupied) return true;
    const int margin = static_cast<int>(std::ceil(r / g.resolution)) + 2;
    for (int iy = -margin; iy < g.height + margin; ++iy)
        for (int ix = -margin; ix < g.width + margin; ++ix) {
            const double dx = g.center_x(ix) - s.x;
            const double dy = g.center_y(iy) - s.y;
            if (dx * dx + dy * dy > r * r) continue;
            if (g.at(ix, iy) == Cell::Occupied) return true;
        }
    return false;
}

} // namespace

TEST_CASE("step matches the analytic Euler rule") {
    State s = step(State{0, 0, 0}, Control{0, 0}, 0.1);
    CHECK(s == State{0, 0, 0});

    s = step(State{0, 0, 0}, Control{1, 0}, 0.1);
    CHECK(s.x == Catch::Approx(0.1).margin(1e-15));
    CHECK(s.y == 0.0);
    CHECK(s.theta == 0.0);

    const double half_pi = std::numbers::pi / 2.0;
    s = step(State{1, 1, half_pi}, Control{2, 1}, 0.1);
    CHECK(s.x == Catch::Approx(1.0).margin(1e-15));
    CHECK(s.y == Catch::Approx(1.2).margin(1e-15));
    CHECK(s.theta == Catch::Approx(half_pi + 0.1).margin(1e-15));
}

TEST_CASE("step normalizes theta to [-pi, pi)") {
    State s = step(State{0, 0, 3.0}, Control{0, 2.0}, 0.1);
    CHECK(s.theta >= -std::numbers::pi);
    CHECK(s.theta < std::numbers::pi);
    // exactly pi wraps to -pi
    CHECK(wrap_angle(std::numbers::pi) == Catch::Approx(-std::numbers::pi));
    CHECK(wrap_angle(-std::numbers::pi) == -std::numbers::pi);
}

TEST_CASE("rollout of zero controls is a fixed point") {
    ControlSequence seq(5);
    auto states = rollout(State{0.5, -0.25, 1.0}, seq, 0.1);
    REQUIRE(states.size() == 6);
    for (const auto& s : states) CHECK(s == State{0.5, -0.25, 1.0});
}

TEST_CASE("rollout of constant forward controls advances x") {
    ControlSequence seq(3);
    for (auto& u : seq.u) u = Control{1, 0};
    auto states = rollout(State{0, 0, 0}, seq, 0.1);
    REQUIRE(states.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(states[i].x == Catch::Approx(0.1 * i).margin(1e-15));
}

TEST_CASE("rollout equals the naive oracle and chains step()") {
    SplitMix64 eng(11);
    std::uniform_real_distribution<double> uv(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        State x0 = random_state(eng, -3.0, 3.0);
        ControlSequence seq(12);
        for (auto& u : seq.u) u = Control{uv(eng), uv(eng)};
        auto got = rollout(x0, seq, 0.1);
        auto want = naive_rollout(x0, seq, 0.1);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
        for (std::size_t i = 0; i + 1 < got.size(); ++i)
            CHECK(got[i + 1] == step(got[i], seq.u[i], 0.1));
    }
}

TEST_CASE("rollout is deterministic bit for bit") {
    SplitMix64 eng(12);
    std::uniform_real_distribution<double> uv(-2.0, 2.0);
    State x0 = random_state(eng, -1.0, 1.0);
    ControlSequence seq(30);
    for (auto& u : seq.u) u = Control{uv(eng), uv(eng)};
    CHECK(rollout(x0, seq, 0.05) == rollout(x0, seq, 0.05));
}

TEST_CASE("collides basic cases") {
    OccupancyGrid g = OccupancyGrid::filled(50, 50, Cell::Free);
    CHECK_FALSE(collides(g, State{2.5, 2.5, 0}, 0.2));

    g.ref(25, 25) = Cell::Occupied;
    CHECK(collides(g, State{2.55, 2.55, 0}, 0.01));  // inside the occupied cell

    CHECK(collides(g, State{-1.0, 2.0, 0}, 0.2));  // off the map
    CHECK(collides(g, State{2.0, 4.99, 0}, 0.2));  // disc pokes past the boundary
}

TEST_CASE("collides matches the exhaustive scan oracle") {
    SplitMix64 eng(21);
    std::uniform_real_distribution<double> r(0.05, 0.45);
    for (int trial = 0; trial < 60; ++trial) {
        OccupancyGrid g = random_grid(eng, 18, 14, 0.2);
        State s = random_state(eng, -0.3, 1.9);
        const double radius = r(eng);
        CHECK(collides(g, s, radius) == collides_oracle(g, s, radius));
    }
}

TEST_CASE("min_dist_to_safe basic cases") {
    std::vector<SafeZone> zones{{1.0, 1.0, 0.5}};
    std::vector<State> through{{0, 0, 0}, {1.0, 1.0, 0}};
    CHECK(min_dist_to_safe(through, zones) == 0.0);

    std::vector<State> single{{3.0, 1.0, 0}};
    CHECK(min_dist_to_safe(single, zones) == Catch::Approx(1.5));

    std::vector<SafeZone> none;
    CHECK_THROWS_AS(min_dist_to_safe(single, none), std::invalid_argument);
}

TEST_CASE("min_dist_to_safe equals the exhaustive double loop") {
    SplitMix64 eng(31);
    std::uniform_real_distribution<double> pos(-4.0, 4.0);
    std::uniform_real_distribution<double> rad(0.1, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<State> states;
        for (int i = 0; i < 7; ++i) states.push_back(random_state(eng, -4.0, 4.0));
        std::vector<SafeZone> zones;
        for (int i = 0; i < 4; ++i) zones.push_back(SafeZone{pos(eng), pos(eng), rad(eng)});
        double want = kInf;
        for (const auto& s : states)
            for (const auto& z : zones)
                want = std::min(want, std::max(0.0, std::hypot(s.x - z.x, s.y - z.y) - z.r));
        CHECK(min_dist_to_safe(states, zones) == Catch::Approx(want).margin(1e-14));
        const bool inside = want == 0.0;
        CHECK((min_dist_to_safe(states, zones) == 0.0) == inside);
    }
}

TEST_CASE("reveal covers the whole map when the radius does") {
    SplitMix64 eng(41);
    OccupancyGrid truth = random_grid(eng, 20, 20, 0.25);
    for (auto& c : truth.cells)
        if (c == Cell::Unknown) c = Cell::Free;
    Environment env = make_environment(truth, {SafeZone{0.55, 0.55, 0.2}}, State{}, 0.5, 0.5, 100.0);
    reveal(env, State{1.0, 1.0, 0});
    CHECK(env.known == env.grid);
}

TEST_CASE("reveal with zero radius changes nothing") {
    OccupancyGrid truth = OccupancyGrid::filled(10, 10, Cell::Free);
    Environment env = make_environment(truth, {SafeZone{0.55, 0.55, 0.2}}, State{}, 0.5, 0.5, 0.0);
    const OccupancyGrid before = env.known;
    reveal(env, State{0.5, 0.5, 0});
    CHECK(env.known == before);
}

TEST_CASE("reveal matches the brute-force disc filter and is monotone") {
    SplitMix64 eng(42);
    OccupancyGrid truth = random_grid(eng, 25, 25, 0.2);
    for (auto& c : truth.cells)
        if (c == Cell::Unknown) c = Cell::Free;
    Environment env = make_environment(truth, {SafeZone{0.55, 0.55, 0.2}}, State{}, 0.5, 0.5, 0.7);

    State s{1.2, 1.3, 0};
    reveal(env, s);
    for (int iy = 0; iy < truth.height; ++iy)
        for (int ix = 0; ix < truth.width; ++ix) {
            const double dx = truth.center_x(ix) - s.x;
            const double dy = truth.center_y(iy) - s.y;
            const bool in_disc = dx * dx + dy * dy <= env.sensing_radius * env.sensing_radius;
            CHECK(env.known.at(ix, iy) == (in_disc ? truth.at(ix, iy) : Cell::Unknown));
        }

    // second reveal elsewhere only adds cells
    const OccupancyGrid before = env.known;
    reveal(env, State{2.0, 0.6, 0});
    int known_before = 0, known_after = 0;
    for (std::size_t i = 0; i < before.cells.size(); ++i) {
        if (before.cells[i] != Cell::Unknown) {
            ++known_before;
            CHECK(env.known.cells[i] == before.cells[i]);
        }
        if (env.known.cells[i] != Cell::Unknown) {
            ++known_after;
            CHECK(env.known.cells[i] == truth.cells[i]);
        }
    }
    CHECK(known_after >= known_before);
}

TEST_CASE("nominal_cost basic cases and oracle") {
    Eigen::Vector2d goal(2.0, 1.0);
    Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();

    std::vector<State> at_goal{{2.0, 1.0, 0.3}, {2.0, 1.0, -1.0}};
    CHECK(nominal_cost(at_goal, goal, Q) == 0.0);

    std::vector<State> one{{2.0, 4.0, 0}};  // distance 3
    CHECK(nominal_cost(one, goal, Q) == Catch::Approx(9.0));

    SplitMix64 eng(51);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Eigen::Matrix2d Qr;
    const double a = std::abs(u(eng)) + 0.1, b = std::abs(u(eng)) + 0.1, c = 0.05;
    Qr << a, c, c, b;  // diagonally dominant, PSD
    std::vector<State> states;
    for (int i = 0; i < 9; ++i) states.push_back(random_state(eng, -3.0, 3.0));
    double want = 0.0;
    for (const auto& s : states) {
        const double ex = s.x - goal[0], ey = s.y - goal[1];
        want += ex * (Qr(0, 0) * ex + Qr(0, 1) * ey) + ey * (Qr(1, 0) * ex + Qr(1, 1) * ey);
    }
    CHECK(nominal_cost(states, goal, Qr) == Catch::Approx(want).margin(1e-12));
}

TEST_CASE("known_space_cost gates on the revealed prefix") {
    OccupancyGrid known = OccupancyGrid::filled(40, 10, Cell::Unknown);
    for (int ix = 0; ix < 20; ++ix)
        for (int iy = 0; iy < 10; ++iy) known.ref(ix, iy) = Cell::Free;

    std::vector<State> corridor;
    for (int i = 0; i < 8; ++i) corridor.push_back(State{0.2 + 0.2 * i, 0.5, 0});
    CHECK(known_space_cost(corridor, known, 8) == 0.0);

    std::vector<State> leak = corridor;
    leak[3] = State{2.5, 0.5, 0};  // unknown column
    CHECK(known_space_cost(leak, known, 8) == kInf);

    // first violation exactly at index t_safe is not checked
    std::vector<State> boundary = corridor;
    boundary.push_back(State{2.5, 0.5, 0});
    CHECK(known_space_cost(boundary, known, 8) == 0.0);
    CHECK(known_space_cost(boundary, known, 9) == kInf);

    CHECK(known_space_cost(corridor, known, 0) == 0.0);
    CHECK_THROWS_AS(known_space_cost(corridor, known, 9), std::invalid_argument);
}

TEST_CASE("environment json round trip is exact") {
    SplitMix64 eng(61);
    OccupancyGrid truth = random_grid(eng, 30, 22, 0.15);
    for (auto& c : truth.cells)
        if (c == Cell::Unknown) c = Cell::Free;
    truth.ref(3, 3) = Cell::Free;
    truth.ref(28, 20) = Cell::Free;
    Environment env = make_environment(truth, {SafeZone{0.35, 0.35, 0.31}, SafeZone{1.77, 1.13, 0.405}},
                                       State{0.35, 0.35, 0.7253}, 2.85, 2.05, 2.375, 0.01, 0.1, 1.75);
    env.grid.ref(env.grid.cell_x(0.35), env.grid.cell_y(0.35)) = Cell::Free;
    env.grid.ref(env.grid.cell_x(1.77), env.grid.cell_y(1.13)) = Cell::Free;
    env.grid.ref(env.grid.cell_x(2.85), env.grid.cell_y(2.05)) = Cell::Free;

    const auto j = environment_to_json(env);
    const Environment back = environment_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back == env);
}

TEST_CASE("environment loader accepts occupied_rects") {
    nlohmann::json j;
    j["resolution"] = 0.1;
    j["origin"] = {0.0, 0.0};
    j["size"] = {40, 40};
    j["occupied_rects"] = {{1.0, 1.0, 1.5, 3.0}};
    j["safe_zones"] = {{{"x", 0.5}, {"y", 0.5}, {"r", 0.3}}};
    j["start"] = {{"x", 0.5}, {"y", 0.5}, {"theta", 0.0}};
    j["goal"] = {{"x", 3.5}, {"y", 3.5}};
    j["sensing_radius"] = 2.0;
    j["robot_radius"] = 0.15;
    j["dt"] = 0.1;
    j["v_max"] = 2.0;
    const Environment env = environment_from_json(j);
    CHECK(env.grid.at_point(1.25, 2.0) == Cell::Occupied);
    CHECK(env.grid.at_point(0.5, 0.5) == Cell::Free);
    CHECK(env.known.at_point(0.5, 0.5) == Cell::Unknown);
}

TEST_CASE("environment validation rejects broken configurations") {
    OccupancyGrid truth = OccupancyGrid::filled(10, 10, Cell::Free);
    truth.ref(5, 5) = Cell::Occupied;

    Environment bad_zone = make_environment(truth, {SafeZone{0.55, 0.55, 0.2}}, State{0.2, 0.2, 0}, 0.8, 0.8);
    bad_zone.safe_zones[0] = SafeZone{0.55, 0.55, -1.0};
    CHECK_THROWS_AS(validate_environment(bad_zone), std::invalid_argument);

    Environment zone_in_wall = make_environment(truth, {SafeZone{0.55, 0.55, 0.2}}, State{0.2, 0.2, 0}, 0.8, 0.8);
    zone_in_wall.safe_zones[0] = SafeZone{0.55, 0.55, 0.2};
    zone_in_wall.safe_zones[0].x = truth.center_x(5);
    zone_in_wall.safe_zones[0].y = truth.center_y(5);
    CHECK_THROWS_AS(validate_environment(zone_in_wall), std::invalid_argument);

    Environment start_in_wall = make_environment(truth, {SafeZone{0.15, 0.15, 0.1}}, State{0.55, 0.55, 0}, 0.8, 0.8);
    start_in_wall.start = State{truth.center_x(5), truth.center_y(5), 0};
    CHECK_THROWS_AS(validate_environment(start_in_wall), std::invalid_argument);
}
