#pragma once

// Independent reference computations used by the tests. None of them call
// into the solvers under test.

#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "abex/mdp.hpp"

namespace abex::oracle {

/// V^pi by a dense linear solve of (I - gamma P_pi) V = r_pi.
inline std::vector<double> policy_values_linear(const TabularMdp& mdp, const std::vector<std::size_t>& actions) {
    const std::size_t S = mdp.num_states();
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) {
        const auto i = static_cast<Eigen::Index>(s);
        rhs(i) = mdp.reward(s, actions[s]);
        for (std::size_t next = 0; next < S; ++next)
            system(i, static_cast<Eigen::Index>(next)) -= mdp.discount() * mdp.transition(s, actions[s], next);
    }
    const Eigen::VectorXd v = system.fullPivLu().solve(rhs);
    return std::vector<double>(v.data(), v.data() + v.size());
}

/// Optimal state values by enumerating every deterministic policy and
/// taking the statewise maximum of the linear-solve values.
inline std::vector<double> optimal_values_by_enumeration(const TabularMdp& mdp) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> best(S, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> actions(S, 0);
    while (true) {
        const auto v = policy_values_linear(mdp, actions);
        for (std::size_t s = 0; s < S; ++s) best[s] = std::max(best[s], v[s]);
        std::size_t i = 0;
        while (i < S && ++actions[i] == A) actions[i++] = 0;
        if (i == S) break;
    }
    return best;
}

/// Number of moves on a shortest path from `from` to any target, following
/// edges with positive probability; max size_t when unreachable.
inline std::size_t shortest_path_length(const TabularMdp& mdp, std::size_t from, const std::vector<std::size_t>& targets) {
    const std::size_t S = mdp.num_states();
    std::vector<std::size_t> dist(S, std::numeric_limits<std::size_t>::max());
    std::deque<std::size_t> queue{from};
    dist[from] = 0;
    while (!queue.empty()) {
        const std::size_t s = queue.front();
        queue.pop_front();
        for (std::size_t t : targets)
            if (t == s) return dist[s];
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            for (std::size_t next = 0; next < S; ++next)
                if (mdp.transition(s, a, next) > 0.0 && dist[next] == std::numeric_limits<std::size_t>::max()) {
                    dist[next] = dist[s] + 1;
                    queue.push_back(next);
                }
    }
    return std::numeric_limits<std::size_t>::max();
}

/// True when every state reaches every other state under some action sequence.
inline bool communicating(const TabularMdp& mdp) {
    const std::size_t S = mdp.num_states();
    for (std::size_t from = 0; from < S; ++from) {
        std::vector<char> seen(S, 0);
        std::deque<std::size_t> queue{from};
        seen[from] = 1;
        std::size_t reached = 1;
        while (!queue.empty()) {
            const std::size_t s = queue.front();
            queue.pop_front();
            for (std::size_t a = 0; a < mdp.num_actions(); ++a)
                for (const auto& edge : mdp.successors(s, a))
                    if (edge.prob > 0.0 && !seen[edge.next]) {
                        seen[edge.next] = 1;
                        ++reached;
                        queue.push_back(edge.next);
                    }
        }
        if (reached != S) return false;
    }
    return true;
}

}  // namespace abex::oracle
