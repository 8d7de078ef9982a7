#include "abex/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace abex {

EnvBundle make_overestimation(std::size_t t, double big_reward, double eps_reward, double p, double gamma) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("make_overestimation: p must lie in (0, 1]");
    if (!(big_reward >= 0.0) || !(eps_reward >= 0.0) || !std::isfinite(big_reward) || !std::isfinite(eps_reward))
        throw std::invalid_argument("make_overestimation: rewards must be finite and non-negative");
    const double scale = std::max({big_reward, eps_reward, 1e-300});

    const std::size_t starts = t + 1;
    const std::size_t S = starts + 2;
    const std::size_t t0 = starts;
    const std::size_t t1 = starts + 1;
    const std::size_t A = 2;
    const double restart = 1.0 / static_cast<double>(starts);

    std::vector<std::vector<Transition>> rows(S * A);
    std::vector<double> rewards(S * A, 0.0);
    std::vector<Transition> reset;
    for (std::size_t s = 0; s < starts; ++s) reset.push_back({s, restart});

    for (std::size_t s = 0; s < starts; ++s) {
        rows[s * A + overestimation::kLeft] = {{t0, 1.0}};
        auto& right = rows[s * A + overestimation::kRight];
        right.push_back({t1, p});
        if (p < 1.0)
            for (const auto& r : reset) right.push_back({r.next, (1.0 - p) * r.prob});
    }
    for (std::size_t a = 0; a < A; ++a) {
        rows[t0 * A + a] = reset;
        rows[t1 * A + a] = reset;
        rewards[t0 * A + a] = eps_reward / scale;
        rewards[t1 * A + a] = big_reward / scale;
    }

    std::vector<double> initial(S, 0.0);
    for (std::size_t s = 0; s < starts; ++s) initial[s] = restart;

    std::vector<std::size_t> phi(S, 0);
    phi[t0] = 1;
    phi[t1] = 2;

    std::vector<std::string> labels;
    for (std::size_t s = 0; s < starts; ++s) labels.push_back("s" + std::to_string(s));
    labels.push_back("T0");
    labels.push_back("T1");

    return EnvBundle{TabularMdp::from_rows(S, A, rows, std::move(rewards), gamma, std::move(initial)),
                     Aggregation::uniform(std::move(phi)), std::move(labels), scale};
}

double overestimation_action_value(const EnvBundle& env, std::size_t start_state, std::size_t action) {
    double value = 0.0;
    for (const auto& t : env.mdp.successors(start_state, action))
        value += t.prob * env.mdp.reward(t.next, 0);
    return value * env.reward_scale;
}

std::size_t NineRoomsLayout::room_of(std::size_t cell) const {
    const std::size_t x = cell % width();
    const std::size_t y = cell / width();
    return (y / room_size) * 3 + (x / room_size);
}

std::vector<std::size_t> NineRoomsLayout::goal_cells() const {
    const std::size_t w = width();
    // One cell in from the outer corner, so each goal cell has a non-goal
    // neighbour and stays reachable.
    return {cell(w - 3, w - 3), cell(w - 2, w - 3), cell(w - 3, w - 2), cell(w - 2, w - 2)};
}

std::size_t NineRoomsLayout::move(std::size_t from, std::size_t action) const {
    const std::size_t w = width();
    const std::size_t x = from % w;
    const std::size_t y = from / w;
    const std::size_t door = room_size / 2;
    std::size_t nx = x, ny = y;
    switch (action) {
        case ninerooms::kUp:
            if (y + 1 >= w) return from;
            ny = y + 1;
            break;
        case ninerooms::kDown:
            if (y == 0) return from;
            ny = y - 1;
            break;
        case ninerooms::kLeft:
            if (x == 0) return from;
            nx = x - 1;
            break;
        case ninerooms::kRight:
            if (x + 1 >= w) return from;
            nx = x + 1;
            break;
        default:
            throw std::out_of_range("NineRoomsLayout::move: unknown action");
    }
    // Crossing a wall is allowed only through the doorway at its midpoint.
    if (nx / room_size != x / room_size && y % room_size != door) return from;
    if (ny / room_size != y / room_size && x % room_size != door) return from;
    return cell(nx, ny);
}

EnvBundle make_nine_rooms(std::size_t room_size, double gamma) {
    if (room_size < 3) throw std::invalid_argument("make_nine_rooms: room_size must be >= 3");
    const NineRoomsLayout layout{room_size};
    const std::size_t S = layout.num_cells();
    const std::size_t A = 4;
    const auto goals = layout.goal_cells();

    std::vector<std::vector<Transition>> rows(S * A);
    std::vector<double> rewards(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const bool goal = std::find(goals.begin(), goals.end(), s) != goals.end();
        for (std::size_t a = 0; a < A; ++a) {
            if (goal) {
                rows[s * A + a] = {{layout.start_cell(), 1.0}};
                rewards[s * A + a] = 1.0;
            } else {
                rows[s * A + a] = {{layout.move(s, a), 1.0}};
            }
        }
    }
    std::vector<double> initial(S, 0.0);
    initial[layout.start_cell()] = 1.0;

    std::vector<std::size_t> phi(S);
    std::vector<std::string> labels(S);
    for (std::size_t s = 0; s < S; ++s) {
        phi[s] = layout.room_of(s);
        labels[s] = "(" + std::to_string(s % layout.width()) + "," + std::to_string(s / layout.width()) + ")";
    }
    return EnvBundle{TabularMdp::from_rows(S, A, rows, std::move(rewards), gamma, std::move(initial)),
                     Aggregation::uniform(std::move(phi)), std::move(labels), 1.0};
}

EnvBundle make_counterexample(double eta, double gamma) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("make_counterexample: eta must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("make_counterexample: gamma must lie in (0, 1)");
    constexpr std::size_t S = 3, A = 2;
    // clang-format off
    const std::vector<double> transitions = {
        // s0: a1, a2
        1, 0, 0,              1, 0, 0,
        // s1: a1, a2
        0, 1.0 - eta, eta,    0, 1, 0,
        // s2: a1, a2
        0, 0, 1,              0, 0, 1,
    };
    std::vector<double> rewards = {
        0.0, eta,
        eta, 0.0,
        1.0, 1.0,
    };
    // clang-format on
    return EnvBundle{TabularMdp(S, A, transitions, std::move(rewards), gamma, {1.0, 0.0, 0.0}),
                     Aggregation::uniform({0, 0, 1}), {"s0", "s1", "s2"}, 1.0};
}

}  // namespace abex
