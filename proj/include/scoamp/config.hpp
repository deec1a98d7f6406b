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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scoamp/coupling.hpp"
#include "scoamp/denoiser.hpp"
#include "scoamp/oamp.hpp"
#include "scoamp/se.hpp"

// Experiment configuration: TOML or JSON (picked by file extension), strict
// validation, unknown keys rejected.
namespace scoamp::config {

struct SystemConfig {
    int l = 1;
    int w = 0;
    int n = 0;
    int m = 0;
    coupling::Ensemble ensemble = coupling::Ensemble::IidGaussian;
    double kappa = 1.0;
    denoiser::Prior prior;
    double snr_db = 30.0;
    std::uint64_t seed = 1;
    double sigma2() const;
};

enum class Algo { Oamp, LmOamp, Amp };

struct SimulateConfig {
    Algo algo = Algo::Oamp;
    int iterations = 200;
    int trials = 1;
    double zeta = 1.0;
    oamp::Filter filter = oamp::Filter::Lmmse;
};

struct SeConfig {
    se::SeKind kind = se::SeKind::Bayes;
    int iterations = 1000;
    double tol = 1e-10;
    oamp::Filter filter = oamp::Filter::Lmmse;
};

struct PotentialConfig {
    int grid_n = 2048;
    double delta = 0.0;  // 0: use M/N from the system block
};

enum class ThresholdMode { Bp, Potential, Coupled };

struct ThresholdConfig {
    ThresholdMode mode = ThresholdMode::Coupled;
    double delta_lo = 0.0;  // 0: information dimension of the prior
    double delta_hi = 1.0;
    double tol = 1e-4;
    int iterations = 1000;
    std::vector<double> kappas;  // sweep values; empty: system kappa
    std::vector<int> widths;     // sweep values; empty: system W
};

struct ExperimentConfig {
    SystemConfig system;
    SimulateConfig simulate;
    SeConfig se;
    PotentialConfig potential;
    ThresholdConfig threshold;
    std::string raw;  // canonical serialized form, hashed into outputs
};

// Loads and validates; throws ConfigError naming the offending key.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, bool is_toml);

std::uint64_t config_hash(const ExperimentConfig& cfg);

coupling::CoupledSystem build_from_config(const SystemConfig& sys,
                                          std::uint64_t seed_override);
se::SeModel model_from_config(const SystemConfig& sys);

}  // namespace scoamp::config
