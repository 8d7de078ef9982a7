#include "abex/pseudocount.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace abex {

namespace {

void require_learning_positive(const DensityProbe& probe, const char* who) {
    if (probe.increment < -kSaturationThreshold)
        throw std::domain_error(std::string(who) + ": model is not learning-positive (rho' < rho)");
}

}  // namespace

CountEstimate pseudo_count(const DensityProbe& probe) {
    require_learning_positive(probe, "pseudo_count");
    if (probe.increment <= kSaturationThreshold) return {kSaturatedCount, true};
    const double value = probe.rho * (1.0 - probe.rho_prime) / probe.increment;
    return {std::max(value, 0.0), false};
}

CountEstimate pseudo_count_total(const DensityProbe& probe) {
    require_learning_positive(probe, "pseudo_count_total");
    if (probe.increment <= kSaturationThreshold) return {kSaturatedCount, true};
    return {std::max((1.0 - probe.rho_prime) / probe.increment, 0.0), false};
}

CountEstimate abstract_pseudo_count(const DensityModel& model, const Aggregation& agg,
                                    std::size_t abstract_state, std::size_t a) {
    return pseudo_count(model.lifted_probe(agg, abstract_state, a));
}

CountEstimate corrected_pseudo_count(const DensityProbe& probe) {
    require_learning_positive(probe, "corrected_pseudo_count");
    if (probe.rho == 0.0) return {0.0, false};
    const double lead = probe.rho_second * probe.increment;
    const double denominator = lead - probe.rho * probe.second_increment;
    if (!(denominator > kSaturationThreshold * lead)) return {kSaturatedCount, true};
    const double value = 2.0 * probe.rho * probe.second_increment / denominator;
    return {std::max(value, 0.0), false};
}

PseudoCountReport pseudo_count_report(const DensityModel& model, const Aggregation& agg, std::size_t s,
                                      std::size_t a) {
    const auto ground = model.probe(s, a);
    const auto lifted = model.lifted_probe(agg, agg.phi(s), a);
    const auto hat = pseudo_count(ground);
    const auto tilde = corrected_pseudo_count(ground);
    const auto hat_total = pseudo_count_total(ground);
    const auto abstract = pseudo_count(lifted);
    const auto abstract_total = pseudo_count_total(lifted);
    PseudoCountReport report;
    report.n_hat = hat.value;
    report.n_tilde = tilde.value;
    report.n_hat_abstract = abstract.value;
    report.n_hat_total = hat_total.value;
    report.n_hat_abstract_total = abstract_total.value;
    report.saturated = hat.saturated || tilde.saturated || abstract.saturated;
    return report;
}

double exact_abstraction_identity(std::size_t g_size, double n_hat_abstract, double n_hat_total) {
    if (g_size == 0) throw std::invalid_argument("exact_abstraction_identity: class size must be >= 1");
    if (!(n_hat_abstract >= 0.0)) throw std::invalid_argument("exact_abstraction_identity: negative count");
    if (g_size == 1) return n_hat_abstract;
    if (n_hat_abstract >= n_hat_total) return std::numeric_limits<double>::infinity();
    const double g = static_cast<double>(g_size);
    return n_hat_abstract *
           (1.0 + (g - 1.0) * (n_hat_abstract + 1.0) / (g * (n_hat_total - n_hat_abstract)));
}

CountBounds count_sandwich_bounds(double epsilon, std::size_t g_size, double n_hat_abstract,
                                  double n_hat_total) {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("count_sandwich_bounds: epsilon must lie in [0, 1)");
    if (g_size == 0) throw std::invalid_argument("count_sandwich_bounds: class size must be >= 1");
    if (!(n_hat_abstract >= 0.0)) throw std::invalid_argument("count_sandwich_bounds: negative count");

    const double g = static_cast<double>(g_size);
    const double N = n_hat_abstract;
    const double n = n_hat_total;
    const double up3 = std::pow(1.0 + epsilon, 3);
    const double down3 = std::pow(1.0 - epsilon, 3);
    const double alpha3 = down3 / up3;

    const double f_num = g * (n + 1.0) - up3 * (N + 1.0);
    const double f_den = g * (n / alpha3 - N + (1.0 / alpha3 - 1.0) * n * N);
    const double g_num = g * (n + 1.0) - down3 * (N + 1.0);
    const double g_den = g * (alpha3 * n - N - (1.0 - alpha3) * n * N);

    CountBounds bounds;
    if (f_den > 0.0) {
        bounds.low = N * f_num / f_den;
    } else {
        bounds.low = 0.0;
        bounds.divergent = true;
    }
    if (g_den > 0.0) {
        bounds.high = N * g_num / g_den;
    } else {
        bounds.high = std::numeric_limits<double>::infinity();
        bounds.divergent = true;
    }
    return bounds;
}

double concentration_cap(double k) {
    if (!(k > 1.0) || !std::isfinite(k)) throw std::invalid_argument("concentration_cap: k must be > 1");
    return 1.0 + 2.0 / (k - 1.0);
}

RatioConstants estimate_ratio_constants(History history, const DensityModel& prototype,
                                        const Aggregation& agg) {
    if (history.empty()) throw std::invalid_argument("estimate_ratio_constants: empty history");
    if (prototype.observations() != 0)
        throw std::invalid_argument("estimate_ratio_constants: prototype model must be untrained");
    if (agg.num_ground() != prototype.num_states())
        throw std::invalid_argument("estimate_ratio_constants: aggregation does not match the model");

    auto model = prototype.clone();
    CountTable counts(prototype.num_states(), prototype.num_actions());
    RatioConstants out;
    out.a = out.c = std::numeric_limits<double>::infinity();
    out.b = out.d = -std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto [s, a] = history[i];
        model->update(s, a);
        counts.add(s, a);
        const double n = static_cast<double>(counts.total());
        for (std::size_t c = 0; c < agg.num_abstract(); ++c) {
            for (std::size_t act = 0; act < prototype.num_actions(); ++act) {
                const std::uint64_t class_count = counts.class_count(agg, c, act);
                const auto probe = model->lifted_probe(agg, c, act);
                if (class_count > 0) {
                    const double mu = static_cast<double>(class_count) / n;
                    const double ratio = probe.rho / mu;
                    out.a = std::min(out.a, ratio);
                    out.b = std::max(out.b, ratio);
                    ++out.level_samples;
                }
                if (static_cast<double>(class_count) < n) {
                    const double mu_increment = (n - static_cast<double>(class_count)) / (n * (n + 1.0));
                    const double ratio = probe.increment / mu_increment;
                    out.c = std::min(out.c, ratio);
                    out.d = std::max(out.d, ratio);
                    ++out.increment_samples;
                }
            }
        }
    }
    out.increments_defined = out.increment_samples > 0;
    if (!out.increments_defined) out.c = out.d = std::numeric_limits<double>::quiet_NaN();
    return out;
}

bool ratio_sandwich_check(const RatioConstants& k, double n_hat_abstract, std::uint64_t n_empirical) {
    const double N = static_cast<double>(n_empirical);
    const double low = k.a * k.a * k.c * N;
    const double high = k.b * k.b * k.d * N;
    const double slack = 1e-9 * std::max({1.0, std::abs(low), std::abs(high)});
    return n_hat_abstract >= low - slack && n_hat_abstract <= high + slack;
}

InducedAbstractionReport verify_induced_abstraction(History history, const DensityModel& prototype,
                                                    const Aggregation& agg, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("verify_induced_abstraction: epsilon must lie in [0, 1)");
    if (prototype.observations() != 0)
        throw std::invalid_argument("verify_induced_abstraction: prototype model must be untrained");
    if (agg.num_ground() != prototype.num_states())
        throw std::invalid_argument("verify_induced_abstraction: aggregation does not match the model");

    InducedAbstractionReport report;
    auto model = prototype.clone();
    const std::size_t A = prototype.num_actions();
    auto consider = [&](double numerator, double denominator, std::size_t prefix, std::size_t s,
                        std::size_t partner, std::size_t a) {
        ++report.comparisons;
        if (denominator <= 0.0) {
            ++report.skipped;
            return;
        }
        const double ratio = numerator / denominator;
        const double violation = std::max({0.0, ratio - (1.0 + epsilon), (1.0 - epsilon) - ratio});
        if (violation > report.worst_violation) {
            report.worst_violation = violation;
            report.worst_prefix = prefix;
            report.worst_state = s;
            report.worst_partner = partner;
            report.worst_action = a;
        }
    };

    for (std::size_t i = 0; i < history.size(); ++i) {
        model->update(history[i].first, history[i].second);
        const std::size_t prefix = i + 1;
        for (std::size_t c = 0; c < agg.num_abstract(); ++c) {
            const auto group = agg.members(c);
            if (group.size() < 2) continue;
            for (std::size_t a = 0; a < A; ++a) {
                std::vector<DensityProbe> probes;
                probes.reserve(group.size());
                for (auto s : group) probes.push_back(model->probe(s, a));
                for (std::size_t x = 0; x < group.size(); ++x) {
                    for (std::size_t y = 0; y < group.size(); ++y) {
                        if (x == y) continue;
                        consider(probes[x].rho, probes[y].rho, prefix, group[x], group[y], a);
                        consider(probes[x].increment, probes[y].increment, prefix, group[x], group[y], a);
                    }
                }
            }
        }
    }
    report.pass = report.worst_violation <= 1e-12;
    return report;
}

}  // namespace abex
