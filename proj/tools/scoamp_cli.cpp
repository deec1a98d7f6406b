// Copyright 2026-present the scoamp project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "scoamp/amp.hpp"
#include "scoamp/config.hpp"
#include "scoamp/errors.hpp"
#include "scoamp/lmoamp.hpp"
#include "scoamp/oamp.hpp"
#include "scoamp/potential.hpp"
#include "scoamp/se.hpp"

namespace {

using namespace scoamp;
using nlohmann::json;

struct OutputTarget {
    std::string path;  // empty: stdout
    std::ostringstream csv;
    json summary;

    void flush() {
        if (path.empty()) {
            std::cout << csv.str();
            std::cout << "# summary: " << summary.dump() << "\n";
        } else {
            std::ofstream out(path);
            if (!out) throw ConfigError("cannot open output file '" + path + "'");
            out << csv.str();
            std::ofstream js(path + ".summary.json");
            js << summary.dump(2) << "\n";
        }
    }
};

void write_header(OutputTarget& out, const config::ExperimentConfig& cfg,
                  const std::string& subcommand, std::uint64_t seed) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "0x%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    out.csv << "# scoamp " << subcommand << "\n";
    out.csv << "# config_hash: " << hash << "\n";
    out.csv << "# seed: " << seed << "\n";
}

void append_csv(std::ostringstream& csv, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    csv << buf;
}

int cmd_simulate(const config::ExperimentConfig& cfg, OutputTarget& out,
                 std::uint64_t seed, int workers) {
    const auto& sim = cfg.simulate;
    const int trials = sim.trials;
    if (trials < 1) throw ConfigError("simulate: trials must be >= 1");

    // Per-trial MSE trajectories, gathered into fixed slots so the output is
    // byte-identical regardless of worker scheduling.
    std::vector<std::vector<std::vector<double>>> results(trials);
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error_text;
    std::mutex error_mu;

    auto run_trial = [&](int trial) {
        std::seed_seq seq{static_cast<std::uint64_t>(seed),
                          static_cast<std::uint64_t>(trial)};
        std::vector<std::uint64_t> trial_seed(1);
        seq.generate(trial_seed.begin(), trial_seed.end());
        auto sys = config::build_from_config(cfg.system, trial_seed[0]);
        if (sim.algo == config::Algo::Oamp) {
            oamp::Options opts;
            opts.filter = sim.filter;
            opts.zeta = sim.zeta;
            opts.iterations = sim.iterations;
            results[trial] = oamp::run_oamp(sys, opts).mse;
        } else if (sim.algo == config::Algo::LmOamp) {
            results[trial] = lmoamp::run_lmoamp(sys, sim.iterations).mse;
        } else {
            amp::AmpOptions opts;
            opts.iterations = sim.iterations;
            opts.zeta = sim.zeta;
            results[trial] = amp::run_amp(sys, opts).mse;
        }
    };

    auto worker = [&]() {
        for (;;) {
            const int trial = next.fetch_add(1);
            if (trial >= trials || failed.load()) return;
            try {
                run_trial(trial);
            } catch (const std::exception& e) {
                std::scoped_lock lk(error_mu);
                failed.store(true);
                error_text = e.what();
                return;
            }
        }
    };
    const int nthreads = std::max(1, std::min(workers, trials));
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load()) throw std::runtime_error("simulate: " + error_text);

    write_header(out, cfg, "simulate", seed);
    out.csv << "trial,iter,section,mse\n";
    for (int tr = 0; tr < trials; ++tr)
        for (std::size_t t = 0; t < results[tr].size(); ++t)
            for (std::size_t l = 0; l < results[tr][t].size(); ++l) {
                out.csv << tr << "," << t << "," << l << ",";
                append_csv(out.csv, results[tr][t][l]);
                out.csv << "\n";
            }

    // Largest-section MSE at the final iteration, mean/std across trials.
    double mean = 0.0, m2 = 0.0;
    for (int tr = 0; tr < trials; ++tr) {
        double largest = 0.0;
        for (double v : results[tr].back()) largest = std::max(largest, v);
        const double d = largest - mean;
        mean += d / (tr + 1);
        m2 += d * (largest - mean);
    }
    const double stddev = trials > 1 ? std::sqrt(m2 / (trials - 1)) : 0.0;
    out.csv << "# summary row: trial=-1 holds the mean largest-section MSE\n";
    out.csv << "-1," << (cfg.simulate.iterations - 1) << ",-1,";
    append_csv(out.csv, mean);
    out.csv << "\n";
    out.summary = {{"largest_mse_mean", mean},
                   {"largest_mse_std", stddev},
                   {"trials", trials},
                   {"iterations", cfg.simulate.iterations}};
    return 0;
}

int cmd_se(const config::ExperimentConfig& cfg, OutputTarget& out,
           std::uint64_t seed) {
    auto model = config::model_from_config(cfg.system);
    const auto& sc = cfg.se;
    write_header(out, cfg, "se", seed);

    if (sc.kind == se::SeKind::Approx) {
        // Emit the approximate state alongside the exact recursion; the diff
        // column tracks the width-limit approximation error.
        auto r = se::limit_r_function(model.ensemble, model.delta(), model.kappa);
        auto approx = se::init_approx_state(model);
        auto exact = se::init_se_state(model);
        out.csv << "iter,section,e_tilde,e_exact,diff\n";
        for (int t = 0; t < sc.iterations; ++t) {
            se::se_step_approx(model, r, approx);
            se::se_step_bayes(model, exact);
            const auto es = se::se_to_es(model, exact);
            for (int ell = 0; ell < model.base.rows(); ++ell) {
                out.csv << t << "," << ell << ",";
                append_csv(out.csv, approx.e_tilde[ell]);
                out.csv << ",";
                append_csv(out.csv, es.e[ell]);
                out.csv << ",";
                append_csv(out.csv, approx.e_tilde[ell] - es.e[ell]);
                out.csv << "\n";
            }
        }
        out.summary = {{"kind", "approx"}, {"iterations", sc.iterations}};
        out.flush();
        return 0;
    }

    auto res = se::run_se(sc.kind, model, sc.iterations, sc.tol, -1.0, sc.filter);
    out.csv << "iter,section,v_postB\n";
    for (std::size_t t = 0; t < res.trajectory.size(); ++t)
        for (std::size_t l = 0; l < res.trajectory[t].size(); ++l) {
            out.csv << t << "," << l << ",";
            append_csv(out.csv, res.trajectory[t][l]);
            out.csv << "\n";
        }
    out.summary = {{"converged", res.converged},
                   {"iterations_run", res.iterations_run},
                   {"mean_v_post", res.mean_v_post},
                   {"max_v_post", res.max_v_post}};
    return 0;
}

int cmd_potential(const config::ExperimentConfig& cfg, OutputTarget& out,
                  std::uint64_t seed) {
    const double sigma2 = cfg.system.sigma2();
    const double delta = cfg.potential.delta > 0.0
                             ? cfg.potential.delta
                             : static_cast<double>(cfg.system.m) / cfg.system.n;
    denoiser::MmseIntegralCache mi(cfg.system.prior);
    auto rf = potential::RFunction::limit_of(cfg.system.ensemble, delta,
                                             cfg.system.kappa, 4.0 / sigma2);
    auto curve = potential::potential_curve(mi, rf, sigma2, cfg.potential.grid_n);

    write_header(out, cfg, "potential", seed);
    out.csv << "E,F\n";
    for (std::size_t i = 0; i < curve.e_grid.size(); ++i) {
        append_csv(out.csv, curve.e_grid[i]);
        out.csv << ",";
        append_csv(out.csv, curve.f_values[i]);
        out.csv << "\n";
    }
    json mins = json::array();
    for (const auto& mz : curve.minimizers)
        mins.push_back({{"E", mz.first}, {"F", mz.second}});
    out.summary = {{"delta", delta},
                   {"sigma2", sigma2},
                   {"minimizers", mins},
                   {"unique_minimizer", curve.unique_minimizer},
                   {"degenerate_tie", curve.degenerate_tie}};
    return 0;
}

int cmd_threshold(const config::ExperimentConfig& cfg, OutputTarget& out,
                  std::uint64_t seed) {
    const auto& th = cfg.threshold;
    const double sigma2 = cfg.system.sigma2();
    const auto& prior = cfg.system.prior;
    const double lo =
        th.delta_lo > 0.0 ? th.delta_lo : prior.information_dimension();
    if (!(lo < th.delta_hi))
        throw ConfigError("threshold: degenerate delta bracket");

    std::vector<double> kappas =
        th.kappas.empty() ? std::vector<double>{cfg.system.kappa} : th.kappas;
    std::vector<int> widths =
        th.widths.empty() ? std::vector<int>{cfg.system.w} : th.widths;

    write_header(out, cfg, "threshold", seed);
    out.csv << "kappa,W,delta,rate_adjusted\n";
    json rows = json::array();

    denoiser::MmseIntegralCache mi(prior);
    for (double kappa : kappas) {
        const auto ensemble =
            kappa > 1.0 ? coupling::Ensemble::Geometric : cfg.system.ensemble;
        if (th.mode == config::ThresholdMode::Coupled) {
            for (int w : widths) {
                if (w == 0) {
                    // Uncoupled: infimum of delta whose standard-init SE
                    // reaches the artificially initialized fixed point.
                    auto pred = [&](double d) {
                        const double target = potential::uncoupled_fixed_point(
                            prior, ensemble, kappa, sigma2, d, 1e-6);
                        const double reached = potential::uncoupled_fixed_point(
                            prior, ensemble, kappa, sigma2, d, -1.0,
                            th.iterations);
                        return std::abs(reached - target) < 1e-6;
                    };
                    double a = lo, b = th.delta_hi;
                    while (b - a > th.tol) {
                        const double mid = 0.5 * (a + b);
                        (pred(mid) ? b : a) = mid;
                    }
                    const double d = 0.5 * (a + b);
                    out.csv << kappa << "," << w << ",";
                    append_csv(out.csv, d);
                    out.csv << ",";
                    append_csv(out.csv, d);
                    out.csv << "\n";
                    rows.push_back({{"kappa", kappa},
                                    {"W", w},
                                    {"delta_SC", d},
                                    {"rate_adjusted", d}});
                } else {
                    auto res = potential::coupled_threshold(
                        prior, ensemble, kappa, sigma2, cfg.system.l, w,
                        th.iterations, lo, th.delta_hi, th.tol);
                    out.csv << kappa << "," << w << ",";
                    append_csv(out.csv, res.delta_sc);
                    out.csv << ",";
                    append_csv(out.csv, res.rate_adjusted);
                    out.csv << "\n";
                    rows.push_back({{"kappa", kappa},
                                    {"W", w},
                                    {"delta_SC", res.delta_sc},
                                    {"rate_adjusted", res.rate_adjusted}});
                }
            }
        } else {
            potential::RFamily family = [&](double d) {
                return potential::RFunction::limit_of(ensemble, d, kappa,
                                                      4.0 / sigma2);
            };
            const auto res =
                th.mode == config::ThresholdMode::Bp
                    ? potential::bp_threshold(mi, family, sigma2, lo,
                                              th.delta_hi, th.tol)
                    : potential::potential_threshold(mi, family, sigma2, lo,
                                                     th.delta_hi, th.tol);
            out.csv << kappa << "," << cfg.system.w << ",";
            append_csv(out.csv, res.delta);
            out.csv << ",";
            append_csv(out.csv, res.delta);
            out.csv << "\n";
            rows.push_back(
                {{"kappa", kappa},
                 {"mode", th.mode == config::ThresholdMode::Bp ? "bp" : "potential"},
                 {"delta", res.delta},
                 {"monotone", res.monotone}});
        }
    }
    out.summary = {{"rows", rows}};
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled OAMP experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 1;
    int trials_override = -1;
    double zeta_override = -1.0;
    std::string filter_override, algo_override;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (.json or .toml)")
            ->required();
        sub->add_option("--out", out_path, "output CSV path (default stdout)");
        sub->add_option("--seed", seed, "master seed override")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--workers", workers, "worker threads for trial batches");
    };

    auto* sim = app.add_subcommand("simulate", "finite-size Monte-Carlo runs");
    add_common(sim);
    sim->add_option("--trials", trials_override, "number of trials");
    sim->add_option("--zeta", zeta_override, "damping factor");
    sim->add_option("--filter", filter_override, "lmmse|mf|zf");
    sim->add_option("--algo", algo_override, "oamp|lm-oamp|amp");

    auto* sec = app.add_subcommand("se", "state-evolution recursions");
    add_common(sec);
    auto* pot = app.add_subcommand("potential", "potential function curve");
    add_common(pot);
    auto* thr = app.add_subcommand("threshold", "threshold computation");
    add_common(thr);

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = config::load_config(config_path);
        if (trials_override > 0) cfg.simulate.trials = trials_override;
        if (zeta_override >= 0.0) cfg.simulate.zeta = zeta_override;
        if (!filter_override.empty()) {
            if (filter_override == "lmmse") cfg.simulate.filter = oamp::Filter::Lmmse;
            else if (filter_override == "mf") cfg.simulate.filter = oamp::Filter::Mf;
            else if (filter_override == "zf") cfg.simulate.filter = oamp::Filter::Zf;
            else throw ConfigError("unknown filter '" + filter_override + "'");
        }
        if (!algo_override.empty()) {
            if (algo_override == "oamp") cfg.simulate.algo = config::Algo::Oamp;
            else if (algo_override == "lm-oamp") cfg.simulate.algo = config::Algo::LmOamp;
            else if (algo_override == "amp") cfg.simulate.algo = config::Algo::Amp;
            else throw ConfigError("unknown algo '" + algo_override + "'");
        }
        const std::uint64_t master = seed_set ? seed : cfg.system.seed;

        OutputTarget out;
        out.path = out_path;
        int rc = 1;
        if (sim->parsed()) rc = cmd_simulate(cfg, out, master, workers);
        else if (sec->parsed()) rc = cmd_se(cfg, out, master);
        else if (pot->parsed()) rc = cmd_potential(cfg, out, master);
        else if (thr->parsed()) rc = cmd_threshold(cfg, out, master);
        if (rc == 0) out.flush();
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
