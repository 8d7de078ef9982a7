#include "abex/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "abex/bounds_suite.hpp"
#include "abex/envs.hpp"

namespace abex {

using nlohmann::json;

namespace {

const std::vector<std::string> kExperiments = {"overestimation", "ninerooms", "counterexample", "bounds-suite"};

bool valid_name(const std::string& name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    });
}

bool uses_agents(const std::string& experiment) {
    return experiment == "overestimation" || experiment == "ninerooms";
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }))
            throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read_optional(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json curve_to_json(const CurveConfig& c) {
    return json{{"name", c.name},
                {"bonus_source", to_string(c.bonus_source)},
                {"density", to_string(c.density)},
                {"use_aggregation", c.use_aggregation},
                {"beta", c.beta},
                {"epsilon_greedy", c.epsilon_greedy},
                {"replan_every", c.replan_every}};
}

CurveConfig curve_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("curves: each entry must be an object");
    reject_unknown_keys(j, {"name", "bonus_source", "density", "use_aggregation", "beta", "epsilon_greedy", "replan_every"},
                        "curve");
    CurveConfig c;
    c.name = j.at("name").get<std::string>();
    c.bonus_source = parse_bonus_source(j.at("bonus_source").get<std::string>());
    if (j.contains("density")) c.density = parse_density_kind(j.at("density").get<std::string>());
    read_optional(j, "use_aggregation", c.use_aggregation);
    read_optional(j, "beta", c.beta);
    read_optional(j, "epsilon_greedy", c.epsilon_greedy);
    read_optional(j, "replan_every", c.replan_every);
    return c;
}

json env_to_json(const ExperimentConfig& config) {
    if (config.experiment == "overestimation") {
        const auto& p = config.overestimation;
        return json{{"t", p.t}, {"big_reward", p.big_reward}, {"eps_reward", p.eps_reward}, {"p", p.p}, {"gamma", p.gamma}};
    }
    if (config.experiment == "ninerooms")
        return json{{"room_size", config.ninerooms.room_size}, {"gamma", config.ninerooms.gamma}};
    if (config.experiment == "counterexample")
        return json{{"eta", config.counterexample.eta}, {"gamma", config.counterexample.gamma}};
    return json{{"trials", config.bounds.trials}, {"seed", config.bounds.seed}};
}

void env_from_json(const json& j, ExperimentConfig& config) {
    if (!j.is_object()) throw std::invalid_argument("env: must be an object");
    if (config.experiment == "overestimation") {
        reject_unknown_keys(j, {"t", "big_reward", "eps_reward", "p", "gamma"}, "env");
        auto& p = config.overestimation;
        read_optional(j, "t", p.t);
        read_optional(j, "big_reward", p.big_reward);
        read_optional(j, "eps_reward", p.eps_reward);
        read_optional(j, "p", p.p);
        read_optional(j, "gamma", p.gamma);
    } else if (config.experiment == "ninerooms") {
        reject_unknown_keys(j, {"room_size", "gamma"}, "env");
        read_optional(j, "room_size", config.ninerooms.room_size);
        read_optional(j, "gamma", config.ninerooms.gamma);
    } else if (config.experiment == "counterexample") {
        reject_unknown_keys(j, {"eta", "gamma"}, "env");
        read_optional(j, "eta", config.counterexample.eta);
        read_optional(j, "gamma", config.counterexample.gamma);
    } else {
        reject_unknown_keys(j, {"trials", "seed"}, "env");
        read_optional(j, "trials", config.bounds.trials);
        read_optional(j, "seed", config.bounds.seed);
    }
}

AgentConfig agent_for(const CurveConfig& curve, const ExperimentConfig& config, const Aggregation& canonical,
                      double beta) {
    AgentConfig agent;
    agent.beta = beta;
    agent.epsilon_greedy = curve.epsilon_greedy;
    agent.bonus_source = curve.bonus_source;
    agent.density = curve.density;
    if (curve.use_aggregation) agent.aggregation = canonical;
    agent.planning_tol = config.planning_tol;
    agent.replan_every = curve.replan_every;
    agent.horizon = config.horizon;
    return agent;
}

std::vector<double> record_points(std::size_t horizon, std::size_t every) {
    std::vector<double> x;
    for (std::size_t t = every; t <= horizon; t += every) x.push_back(static_cast<double>(t));
    if (x.empty() || x.back() != static_cast<double>(horizon)) x.push_back(static_cast<double>(horizon));
    return x;
}

CheckRow compare(const std::string& name, double measured, double expected, double tol) {
    std::ostringstream detail;
    detail.precision(10);
    detail << "numeric " << measured << ", analytic " << expected;
    return {name, measured, expected, tol, std::abs(measured - expected) <= tol, detail.str()};
}

std::vector<CheckRow> counterexample_checks(const CounterexampleParams& params) {
    const double eta = params.eta, gamma = params.gamma;
    const auto env = make_counterexample(eta, gamma);
    const auto& agg = env.canonical_aggregation;
    const auto abstract = build_abstract_mdp(env.mdp, agg);
    const std::size_t A = env.mdp.num_actions();

    const auto v_pi1 = evaluate_policy(abstract, Policy::constant(abstract.num_states(), A, 0), 1e-13);
    const auto v_pi2 = evaluate_policy(abstract, Policy::constant(abstract.num_states(), A, 1), 1e-13);
    const auto q_abstract = solve_value_iteration(abstract, {}, {1e-13, 10000000});
    const auto q_ground = solve_value_iteration(env.mdp, {}, {1e-13, 10000000});
    const auto lifted = lift_policy(greedy_policy(q_abstract), agg);
    const auto v_lifted = evaluate_policy(env.mdp, lifted, 1e-13);
    const double v_star = q_ground.state_values()[0];

    const double tol = 1e-6;
    std::vector<CheckRow> rows;
    rows.push_back(compare("abstract value of always-a1 at abstract s0", v_pi1[0],
                           eta / (2.0 * (1.0 - gamma) * (1.0 - gamma + gamma * eta / 2.0)), tol));
    rows.push_back(compare("abstract value of always-a2 at abstract s0", v_pi2[0], eta / (2.0 * (1.0 - gamma)), tol));
    rows.push_back({"abstract optimal action at abstract s0 is a1", static_cast<double>(greedy_action(q_abstract.row(0))),
                    0.0, 0.0, greedy_action(q_abstract.row(0)) == 0, "0 = a1, 1 = a2"});
    rows.push_back({"ground optimal action at s0 is a2", static_cast<double>(greedy_action(q_ground.row(0))), 1.0, 0.0,
                    greedy_action(q_ground.row(0)) == 1, "0 = a1, 1 = a2"});
    rows.push_back(compare("ground optimal value at s0", v_star, eta / (1.0 - gamma), tol));
    rows.push_back(compare("ground value of the lifted abstract policy at s0", v_lifted[0], 0.0, tol));
    rows.push_back(compare("loss of the lifted abstract policy at s0", v_star - v_lifted[0], eta / (1.0 - gamma), tol));
    rows.push_back(compare("model similarity eta", model_similarity_eta(env.mdp, agg), eta, 1e-12));
    return rows;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (schema_version != kConfigSchemaVersion)
        throw std::invalid_argument("config: unsupported schema_version " + std::to_string(schema_version));
    if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end())
        throw std::invalid_argument("config: unknown experiment '" + experiment + "'");
    if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw std::invalid_argument("config: seeds must be distinct");
    if (horizon == 0) throw std::invalid_argument("config: horizon must be positive");
    if (!(planning_tol > 0.0)) throw std::invalid_argument("config: planning_tol must be positive");
    if (output_dir.empty()) throw std::invalid_argument("config: output_dir must not be empty");

    if (experiment == "overestimation") {
        const auto& p = overestimation;
        if (!(p.p > 0.0 && p.p <= 1.0)) throw std::invalid_argument("config: env.p must lie in (0, 1]");
        if (!(p.big_reward >= 0.0) || !(p.eps_reward >= 0.0) || !std::isfinite(p.big_reward) ||
            !std::isfinite(p.eps_reward))
            throw std::invalid_argument("config: env rewards must be finite and non-negative");
        if (!(p.gamma >= 0.0 && p.gamma < 1.0)) throw std::invalid_argument("config: env.gamma must lie in [0, 1)");
        if (betas.empty()) throw std::invalid_argument("config: overestimation needs a non-empty betas list");
        for (double b : betas)
            if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("config: betas must be positive");
    } else if (experiment == "ninerooms") {
        if (ninerooms.room_size < 3) throw std::invalid_argument("config: env.room_size must be >= 3");
        if (!(ninerooms.gamma >= 0.0 && ninerooms.gamma < 1.0))
            throw std::invalid_argument("config: env.gamma must lie in [0, 1)");
        if (record_every == 0) throw std::invalid_argument("config: record_every must be positive");
    } else if (experiment == "counterexample") {
        if (!(counterexample.eta > 0.0 && counterexample.eta < 1.0))
            throw std::invalid_argument("config: env.eta must lie in (0, 1)");
        if (!(counterexample.gamma > 0.0 && counterexample.gamma < 1.0))
            throw std::invalid_argument("config: env.gamma must lie in (0, 1)");
    } else if (bounds.trials == 0) {
        throw std::invalid_argument("config: env.trials must be positive");
    }

    if (uses_agents(experiment)) {
        if (curves.empty()) throw std::invalid_argument("config: at least one curve is required");
        std::set<std::string> names;
        for (const auto& c : curves) {
            if (!valid_name(c.name))
                throw std::invalid_argument("config: curve name '" + c.name + "' must use only [A-Za-z0-9._-]");
            if (!names.insert(c.name).second) throw std::invalid_argument("config: duplicate curve '" + c.name + "'");
            AgentConfig probe;
            probe.beta = c.beta;
            probe.epsilon_greedy = c.epsilon_greedy;
            probe.bonus_source = c.bonus_source;
            probe.density = c.density;
            probe.replan_every = c.replan_every;
            probe.planning_tol = planning_tol;
            probe.horizon = horizon;
            if (c.use_aggregation) probe.aggregation = Aggregation::identity(1);
            try {
                probe.validate(1);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument("config: curve '" + c.name + "': " + e.what());
            }
        }
    }
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    ExperimentConfig config;
    try {
        reject_unknown_keys(j,
                            {"schema_version", "experiment", "env", "curves", "betas", "seeds", "horizon",
                             "record_every", "planning_tol", "output_dir"},
                            "config");
        config.schema_version = j.at("schema_version").get<int>();
        config.experiment = j.at("experiment").get<std::string>();
        if (std::find(kExperiments.begin(), kExperiments.end(), config.experiment) == kExperiments.end())
            throw std::invalid_argument("config: unknown experiment '" + config.experiment + "'");
        if (j.contains("env")) env_from_json(j.at("env"), config);
        if (j.contains("curves"))
            for (const auto& c : j.at("curves")) config.curves.push_back(curve_from_json(c));
        read_optional(j, "betas", config.betas);
        config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        config.horizon = j.at("horizon").get<std::size_t>();
        read_optional(j, "record_every", config.record_every);
        read_optional(j, "planning_tol", config.planning_tol);
        read_optional(j, "output_dir", config.output_dir);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    config.validate();
    return config;
}

std::string format_config(const ExperimentConfig& config) {
    json curves = json::array();
    for (const auto& c : config.curves) curves.push_back(curve_to_json(c));
    // nlohmann::ordered_json keeps insertion order, so output is stable and readable.
    nlohmann::ordered_json j;
    j["schema_version"] = config.schema_version;
    j["experiment"] = config.experiment;
    j["env"] = env_to_json(config);
    j["curves"] = curves;
    j["betas"] = config.betas;
    j["seeds"] = config.seeds;
    j["horizon"] = config.horizon;
    j["record_every"] = config.record_every;
    j["planning_tol"] = config.planning_tol;
    j["output_dir"] = config.output_dir;
    return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw std::runtime_error("error reading config file '" + path.string() + "'");
    return parse_config(buffer.str());
}

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig config;
    config.experiment = experiment;
    config.output_dir = "results/" + experiment;
    if (experiment == "overestimation") {
        config.curves = {
            {"abstract-count", BonusSource::abstract_count, DensityKind::empirical, true, 1e-4, 0.0, 1},
            {"pseudo-count-hat", BonusSource::pseudo_count_hat, DensityKind::uniform_aggregation, true, 1e-4, 0.0, 1},
        };
        config.betas = {1e-4, 1e-3, 1e-2, 1e-1};
        for (std::uint64_t s = 0; s < 20; ++s) config.seeds.push_back(s);
        config.horizon = 200000;
    } else if (experiment == "ninerooms") {
        config.curves = {
            {"mbie-eb", BonusSource::empirical_count, DensityKind::empirical, false, 1e-4, 0.1, 1},
            {"mbie-eb-pc", BonusSource::pseudo_count_hat, DensityKind::uniform_aggregation, true, 1e-4, 0.1, 1},
            {"mbie-eb-pc-eps0", BonusSource::pseudo_count_hat, DensityKind::uniform_aggregation, true, 1e-4, 0.0, 1},
        };
        for (std::uint64_t s = 0; s < 5; ++s) config.seeds.push_back(s);
        config.horizon = 50000;
        config.record_every = 100;
    } else if (experiment == "counterexample") {
        config.seeds = {0};
        config.horizon = 1;
    } else if (experiment == "bounds-suite") {
        config.seeds = {0};
        config.horizon = 1;
    } else {
        throw std::invalid_argument("default_config: unknown experiment '" + experiment + "'");
    }
    return config;
}

bool ExperimentResult::all_checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckRow& r) { return r.pass; });
}

std::size_t overestimation_convergence_time(const TabularMdp& env, const AgentConfig& agent, std::uint64_t seed) {
    // Start states are every state except the two terminals at the end.
    const std::size_t starts = env.num_states() - 2;
    std::size_t last_wrong = 0;
    bool wrong_seen = false;
    Rng rng(seed);
    run_mbie_eb(env, agent, rng, [&](std::size_t t, std::span<const std::size_t> greedy) {
        for (std::size_t s = 0; s < starts; ++s) {
            if (greedy[s] != overestimation::kRight) {
                last_wrong = t;
                wrong_seen = true;
                return;
            }
        }
    });
    return wrong_seen ? last_wrong + 1 : 0;
}

std::vector<double> cumulative_reward_curve(const TabularMdp& env, const AgentConfig& agent, std::uint64_t seed,
                                            std::size_t record_every, double reward_scale) {
    if (record_every == 0) throw std::invalid_argument("cumulative_reward_curve: record_every must be positive");
    Rng rng(seed);
    const auto trace = run_mbie_eb(env, agent, rng);
    std::vector<double> out;
    for (double x : record_points(agent.horizon, record_every))
        out.push_back(trace.steps[static_cast<std::size_t>(x) - 1].cumulative_reward * reward_scale);
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult result;
    result.experiment = config.experiment;

    if (config.experiment == "overestimation") {
        const auto& p = config.overestimation;
        const auto env = make_overestimation(p.t, p.big_reward, p.eps_reward, p.p, p.gamma);
        ResultTable table;
        table.metric = "convergence_time";
        table.x_label = "beta";
        table.y_label = "steps to optimal policy";
        table.log_x = true;
        table.x = config.betas;
        for (const auto& curve : config.curves) {
            for (auto seed : config.seeds) {
                Series series{curve.name, seed, {}};
                for (double beta : config.betas) {
                    const auto agent = agent_for(curve, config, env.canonical_aggregation, beta);
                    series.values.push_back(static_cast<double>(overestimation_convergence_time(env.mdp, agent, seed)));
                }
                table.series.push_back(std::move(series));
            }
        }
        result.tables.push_back(std::move(table));
    } else if (config.experiment == "ninerooms") {
        const auto env = make_nine_rooms(config.ninerooms.room_size, config.ninerooms.gamma);
        ResultTable table;
        table.metric = "cumulative_reward";
        table.x_label = "timestep";
        table.y_label = "cumulative reward";
        table.x = record_points(config.horizon, config.record_every);
        for (const auto& curve : config.curves) {
            for (auto seed : config.seeds) {
                const auto agent = agent_for(curve, config, env.canonical_aggregation, curve.beta);
                table.series.push_back(
                    {curve.name, seed, cumulative_reward_curve(env.mdp, agent, seed, config.record_every, env.reward_scale)});
            }
        }
        result.tables.push_back(std::move(table));
    } else if (config.experiment == "counterexample") {
        result.checks = counterexample_checks(config.counterexample);
    } else {
        result.checks = run_bounds_suite(config.bounds.trials, config.bounds.seed);
    }
    return result;
}

}  // namespace abex
