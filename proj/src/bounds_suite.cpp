#include "abex/bounds_suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "abex/density.hpp"
#include "abex/pseudocount.hpp"

namespace abex {

namespace {

std::vector<double> random_distribution(Rng& rng, std::size_t size) {
    std::vector<double> p(size);
    double total = 0.0;
    for (auto& x : p) {
        x = uniform01(rng) + 1e-3;
        total += x;
    }
    for (auto& x : p) x /= total;
    return p;
}

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

bool close(double x, double y, double tol) {
    if (std::isinf(x) || std::isinf(y)) return x == y;
    return std::abs(x - y) <= tol * std::max(1.0, std::max(std::abs(x), std::abs(y)));
}

/// Tallies violations for one property.
struct Tally {
    std::string name;
    std::size_t cases = 0;
    std::size_t violations = 0;
    double worst = 0.0;

    void record(bool ok, double error = 0.0) {
        ++cases;
        if (!ok) {
            ++violations;
            worst = std::max(worst, error);
        }
    }
    CheckRow row() const {
        std::ostringstream detail;
        detail << cases << " cases, " << violations << " violations";
        if (violations > 0) detail << ", worst " << worst;
        return {name, static_cast<double>(violations), 0.0, 0.0, violations == 0 && cases > 0, detail.str()};
    }
};

std::unique_ptr<DensityModel> trained(const DensityModel& prototype, History history) {
    auto model = prototype.clone();
    for (const auto& [s, a] : history) model->update(s, a);
    return model;
}

}  // namespace

TabularMdp random_mdp(Rng& rng, std::size_t num_states, std::size_t num_actions, double gamma) {
    std::vector<double> transitions;
    transitions.reserve(num_states * num_actions * num_states);
    for (std::size_t sa = 0; sa < num_states * num_actions; ++sa) {
        const auto row = random_distribution(rng, num_states);
        transitions.insert(transitions.end(), row.begin(), row.end());
    }
    std::vector<double> rewards(num_states * num_actions);
    for (auto& r : rewards) r = uniform01(rng);
    return TabularMdp(num_states, num_actions, transitions, std::move(rewards), gamma,
                      std::vector<double>(num_states, 1.0 / static_cast<double>(num_states)));
}

Aggregation random_aggregation(Rng& rng, std::size_t num_states, std::size_t num_abstract) {
    if (num_abstract == 0 || num_abstract > num_states)
        throw std::invalid_argument("random_aggregation: need 1 <= num_abstract <= num_states");
    std::vector<std::size_t> order(num_states);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = num_states; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    std::vector<std::size_t> phi(num_states);
    for (std::size_t i = 0; i < num_states; ++i)
        phi[order[i]] = i < num_abstract ? i : uniform_index(rng, num_abstract);
    return Aggregation::uniform(std::move(phi));
}

std::vector<std::pair<std::size_t, std::size_t>> random_trajectory(const TabularMdp& mdp, Rng& rng,
                                                                   std::size_t length) {
    std::vector<std::pair<std::size_t, std::size_t>> history;
    history.reserve(length);
    std::size_t s = sample_initial_state(mdp, rng);
    for (std::size_t i = 0; i < length; ++i) {
        const std::size_t a = uniform_index(rng, mdp.num_actions());
        history.push_back({s, a});
        s = step(mdp, s, a, rng).next_state;
    }
    return history;
}

SimilarInstance random_similar_instance(Rng& rng, std::size_t num_abstract, std::size_t max_class_size,
                                        std::size_t num_actions, double eta, double gamma) {
    if (num_abstract == 0 || max_class_size == 0 || num_actions == 0)
        throw std::invalid_argument("random_similar_instance: sizes must be >= 1");
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("random_similar_instance: eta must lie in [0, 1]");

    std::vector<std::size_t> phi;
    for (std::size_t c = 0; c < num_abstract; ++c) {
        const std::size_t size = 1 + uniform_index(rng, max_class_size);
        phi.insert(phi.end(), size, c);
    }
    const std::size_t S = phi.size();
    Aggregation agg = Aggregation::uniform(phi);

    std::vector<double> abstract_reward(num_abstract * num_actions);
    for (auto& r : abstract_reward) r = uniform01(rng);
    std::vector<std::vector<double>> abstract_rows(num_abstract * num_actions);
    for (auto& row : abstract_rows) row = random_distribution(rng, num_abstract);

    std::vector<double> transitions(S * num_actions * S, 0.0);
    std::vector<double> rewards(S * num_actions);
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t c = phi[s];
        for (std::size_t a = 0; a < num_actions; ++a) {
            const double r = abstract_reward[c * num_actions + a] + uniform_in(rng, -eta / 2.0, eta / 2.0);
            rewards[s * num_actions + a] = std::clamp(r, 0.0, 1.0);
            const double lambda = uniform_in(rng, 0.0, eta / 2.0);
            const auto noise = random_distribution(rng, num_abstract);
            const auto& base = abstract_rows[c * num_actions + a];
            for (std::size_t k = 0; k < num_abstract; ++k) {
                const double mass = (1.0 - lambda) * base[k] + lambda * noise[k];
                const auto members = agg.members(k);
                const auto split = random_distribution(rng, members.size());
                for (std::size_t i = 0; i < members.size(); ++i)
                    transitions[(s * num_actions + a) * S + members[i]] = mass * split[i];
            }
        }
    }
    TabularMdp mdp(S, num_actions, transitions, std::move(rewards), gamma,
                   std::vector<double>(S, 1.0 / static_cast<double>(S)));
    const double measured = model_similarity_eta(mdp, agg);
    return {std::move(mdp), std::move(agg), measured};
}

std::vector<CheckRow> run_bounds_suite(std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("run_bounds_suite: trials must be >= 1");
    Rng rng(seed);

    Tally consistency{"pseudo-count equals empirical count (empirical density)"};
    Tally degenerate{"point-mass probes saturate (empirical density, one distinct pair seen)"};
    Tally identity{"pseudo-count matches exact abstraction identity (uniform-aggregation density)"};
    Tally exceeds{"pseudo-count exceeds abstract count when |G| > 1"};
    Tally abstract_consistent{"lifted pseudo-count equals abstract count (uniform-aggregation density)"};
    Tally corrected{"corrected pseudo-count equals abstract count (uniform-aggregation density)"};
    Tally corrected_le{"corrected pseudo-count <= pseudo-count (all models)"};
    Tally sandwich_collapse{"count sandwich collapses to the identity at eps = 0"};
    Tally sandwich_contains{"count sandwich contains perturbed-weight pseudo-counts"};
    Tally sandwich_monotone{"count sandwich widens with eps"};
    Tally cap{"concentration cap bounds the exact-abstraction pseudo-count"};
    Tally q_gap{"Q gap within q_gap_bound (eta-similar abstractions)"};
    Tally subopt{"lifted policy loss within suboptimality_bound"};
    Tally ratio_exact{"ratio sandwich holds with equality (uniform-aggregation density)"};
    Tally ratio_mixture{"ratio sandwich a^2 c N <= N_hat^A <= b^2 d N (mixture density)"};
    Tally induced{"uniform-aggregation density induces its own aggregation at eps = 0"};

    for (std::size_t trial = 0; trial < trials; ++trial) {
        // Empirical density along a random trajectory: every pair, every prefix.
        {
            const std::size_t S = 2 + uniform_index(rng, 7), A = 1 + uniform_index(rng, 3);
            const auto mdp = random_mdp(rng, S, A, 0.9);
            const auto history = random_trajectory(mdp, rng, 60);
            EmpiricalDensity model(S, A);
            CountTable counts(S, A);
            std::size_t distinct = 0;
            for (const auto& [s, a] : history) {
                if (counts.count(s, a) == 0) ++distinct;
                model.update(s, a);
                counts.add(s, a);
                for (std::size_t x = 0; x < S; ++x) {
                    for (std::size_t y = 0; y < A; ++y) {
                        const auto est = pseudo_count(model.probe(x, y));
                        const double truth = static_cast<double>(counts.count(x, y));
                        if (distinct == 1 && truth > 0.0) {
                            degenerate.record(est.saturated);
                            continue;
                        }
                        consistency.record(std::abs(est.value - truth) <= 1e-9, std::abs(est.value - truth));
                    }
                }
            }
        }

        // Uniform-aggregation density on a random aggregation and history.
        {
            const std::size_t S = 2 + uniform_index(rng, 9), A = 1 + uniform_index(rng, 3);
            const std::size_t K = 1 + uniform_index(rng, S);
            const auto agg = random_aggregation(rng, S, K);
            const auto mdp = random_mdp(rng, S, A, 0.9);
            const auto history = random_trajectory(mdp, rng, 1 + uniform_index(rng, 80));
            UniformAggregationDensity prototype(A, agg);
            auto model = trained(prototype, history);
            const auto& eq6 = static_cast<const UniformAggregationDensity&>(*model);
            const double n = static_cast<double>(history.size());
            for (std::size_t s = 0; s < S; ++s) {
                for (std::size_t a = 0; a < A; ++a) {
                    const std::size_t g = agg.class_size(s);
                    const double NA = static_cast<double>(eq6.abstract_count(agg.phi(s), a));
                    const auto probe = model->probe(s, a);
                    if (NA < n) {
                        const auto hat = pseudo_count(probe);
                        const double expected = exact_abstraction_identity(g, NA, n);
                        identity.record(close(hat.value, expected, 1e-9), std::abs(hat.value - expected));
                        if (g > 1 && NA >= 1.0) exceeds.record(hat.value > NA, NA - hat.value);
                        const auto lifted = abstract_pseudo_count(*model, agg, agg.phi(s), a);
                        abstract_consistent.record(close(lifted.value, NA, 1e-9), std::abs(lifted.value - NA));
                        if (NA > 0.0) {
                            const auto tilde = corrected_pseudo_count(probe);
                            corrected.record(close(tilde.value, NA, 1e-9), std::abs(tilde.value - NA));
                            corrected_le.record(tilde.value <= hat.value + 1e-9, tilde.value - hat.value);
                        }
                        const auto at_zero = count_sandwich_bounds(0.0, g, NA, n);
                        sandwich_collapse.record(close(at_zero.low, expected, 1e-9) && close(at_zero.high, expected, 1e-9),
                                                 std::abs(at_zero.low - expected));
                    }
                }
            }
            const auto constants = estimate_ratio_constants(history, prototype, agg);
            for (std::size_t c = 0; c < agg.num_abstract(); ++c) {
                for (std::size_t a = 0; a < A; ++a) {
                    const auto NA = eq6.abstract_count(c, a);
                    if (NA == 0 || static_cast<double>(NA) >= n) continue;
                    const double lifted = abstract_pseudo_count(*model, agg, c, a).value;
                    const bool unit = close(constants.a, 1.0, 1e-9) && close(constants.b, 1.0, 1e-9) &&
                                      (!constants.increments_defined ||
                                       (close(constants.c, 1.0, 1e-9) && close(constants.d, 1.0, 1e-9)));
                    ratio_exact.record(unit && close(lifted, static_cast<double>(NA), 1e-9) &&
                                           ratio_sandwich_check(constants, lifted, NA),
                                       std::abs(lifted - static_cast<double>(NA)));
                }
            }
            induced.record(verify_induced_abstraction(history, prototype, agg, 0.0).pass);
        }

        // Mixture density: corrected count ordering and the ratio sandwich.
        {
            const std::size_t S = 2 + uniform_index(rng, 5), A = 1 + uniform_index(rng, 2);
            const std::size_t K = 1 + uniform_index(rng, S);
            const auto agg = random_aggregation(rng, S, K);
            const auto mdp = random_mdp(rng, S, A, 0.9);
            const auto history = random_trajectory(mdp, rng, 2 + uniform_index(rng, 40));
            MixtureDensity prototype(S, A, uniform_in(rng, 0.05, 0.95));
            auto model = trained(prototype, history);
            for (std::size_t s = 0; s < S; ++s) {
                for (std::size_t a = 0; a < A; ++a) {
                    const auto probe = model->probe(s, a);
                    const auto hat = pseudo_count(probe);
                    const auto tilde = corrected_pseudo_count(probe);
                    if (!hat.saturated && !tilde.saturated)
                        corrected_le.record(tilde.value <= hat.value + 1e-9, tilde.value - hat.value);
                }
            }
            const auto constants = estimate_ratio_constants(history, prototype, agg);
            CountTable counts(S, A);
            for (const auto& [s, a] : history) counts.add(s, a);
            if (constants.increments_defined) {
                for (std::size_t c = 0; c < agg.num_abstract(); ++c) {
                    for (std::size_t a = 0; a < A; ++a) {
                        const auto NA = counts.class_count(agg, c, a);
                        if (NA == 0) continue;
                        const auto lifted = abstract_pseudo_count(*model, agg, c, a);
                        if (lifted.saturated) continue;
                        ratio_mixture.record(ratio_sandwich_check(constants, lifted.value, NA),
                                             lifted.value / static_cast<double>(NA));
                    }
                }
            }
        }

        // Count sandwich on weights perturbed within an eps ratio band, and
        // the concentration cap.
        {
            const std::size_t g = 2 + uniform_index(rng, 4);
            const double eps = uniform_in(rng, 0.0, 0.3);
            std::vector<double> w(g);
            for (auto& x : w) x = uniform_in(rng, 1.0, 1.0 + eps);
            const double lo_w = *std::min_element(w.begin(), w.end());
            const double hi_w = *std::max_element(w.begin(), w.end());
            if (hi_w / lo_w <= 1.0 + eps && lo_w / hi_w >= 1.0 - eps) {
                const double total = std::accumulate(w.begin(), w.end(), 0.0);
                const std::size_t n = 1 + uniform_index(rng, 300);
                const std::size_t NA = 1 + uniform_index(rng, n);
                if (NA < n) {
                    const double N = static_cast<double>(NA), nn = static_cast<double>(n);
                    const double wi = w[uniform_index(rng, g)] / total;
                    const double rho = wi * N / nn, rho1 = wi * (N + 1.0) / (nn + 1.0), rho2 = wi * (N + 2.0) / (nn + 2.0);
                    const double hat = pseudo_count(DensityProbe::from_values(rho, rho1, rho2)).value;
                    const auto bounds = count_sandwich_bounds(eps, g, N, nn);
                    const double slack = 1e-9 * std::max(1.0, hat);
                    sandwich_contains.record(bounds.low - slack <= hat && hat <= bounds.high + slack,
                                             std::max(bounds.low - hat, hat - bounds.high));
                    const auto wider = count_sandwich_bounds(std::min(eps + 0.05, 0.99), g, N, nn);
                    sandwich_monotone.record(wider.low <= bounds.low + 1e-12 && wider.high >= bounds.high - 1e-12);
                }
            }
            const std::size_t n = 10 + uniform_index(rng, 500);
            const double k = uniform_in(rng, 1.1, 10.0);
            const std::size_t NA = static_cast<std::size_t>(std::floor(static_cast<double>(n) / k));
            if (NA >= 1) {
                const double value = exact_abstraction_identity(g, static_cast<double>(NA), static_cast<double>(n));
                const double limit = static_cast<double>(NA) * concentration_cap(k);
                cap.record(value <= limit * (1.0 + 1e-12), value - limit);
            }
        }

        // Abstraction bounds on an eta-similar construction.
        {
            const double eta = uniform_in(rng, 0.01, 0.3);
            const double gamma = uniform_in(rng, 0.5, 0.95);
            const auto inst = random_similar_instance(rng, 1 + uniform_index(rng, 4), 3, 1 + uniform_index(rng, 3),
                                                      eta, gamma);
            const auto abstract = build_abstract_mdp(inst.mdp, inst.aggregation);
            const auto qg = solve_value_iteration(inst.mdp, {}, {1e-12, 1000000});
            const auto qa = solve_value_iteration(abstract, {}, {1e-12, 1000000});
            double gap = 0.0;
            for (std::size_t s = 0; s < inst.mdp.num_states(); ++s)
                for (std::size_t a = 0; a < inst.mdp.num_actions(); ++a)
                    gap = std::max(gap, std::abs(qg(s, a) - qa(inst.aggregation.phi(s), a)));
            const double gap_limit = q_gap_bound(inst.eta, inst.aggregation.num_abstract(), gamma);
            q_gap.record(gap <= gap_limit + 1e-9, gap - gap_limit);

            const auto lifted = lift_policy(greedy_policy(qa), inst.aggregation);
            const auto v_lifted = evaluate_policy(inst.mdp, lifted, 1e-12);
            const auto v_star = qg.state_values();
            double loss = 0.0;
            for (std::size_t s = 0; s < v_star.size(); ++s) loss = std::max(loss, v_star[s] - v_lifted[s]);
            const double loss_limit = suboptimality_bound(inst.eta, inst.aggregation.num_abstract(), gamma);
            subopt.record(loss <= loss_limit + 1e-9, loss - loss_limit);
        }
    }

    std::vector<CheckRow> rows;
    for (const Tally* t : {&consistency, &degenerate, &identity, &exceeds, &abstract_consistent, &corrected,
                           &corrected_le, &sandwich_collapse, &sandwich_contains, &sandwich_monotone, &cap, &q_gap,
                           &subopt, &ratio_exact, &ratio_mixture, &induced})
        rows.push_back(t->row());
    return rows;
}

}  // namespace abex
