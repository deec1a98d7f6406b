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

#include "scoamp/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "scoamp/errors.hpp"

namespace scoamp::config {

namespace {

using nlohmann::json;

// Minimal flat TOML subset: [section] tables, key = value with strings,
// numbers, booleans and one-line scalar arrays. Enough for experiment
// configs; anything fancier belongs in the JSON form.
json toml_to_json(const std::string& text) {
    json root = json::object();
    json* table = &root;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw ConfigError("toml line " + std::to_string(lineno) + ": " + what);
    };
    auto parse_scalar = [&](std::string tok) -> json {
        if (tok.empty()) fail("empty value");
        if (tok.front() == '"') {
            if (tok.size() < 2 || tok.back() != '"') fail("unterminated string");
            return tok.substr(1, tok.size() - 2);
        }
        if (tok == "true") return true;
        if (tok == "false") return false;
        try {
            std::size_t pos = 0;
            if (tok.find_first_of(".eE") == std::string::npos &&
                tok.find("inf") == std::string::npos) {
                const long long v = std::stoll(tok, &pos);
                if (pos == tok.size()) return v;
            }
            const double v = std::stod(tok, &pos);
            if (pos == tok.size()) return v;
        } catch (...) {
        }
        fail("cannot parse value '" + tok + "'");
        return {};
    };
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        // Strip comments outside strings.
        bool in_str = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '#' && !in_str) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed table header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) fail("empty table name");
            table = &root[name];
            if (!table->is_object()) *table = json::object();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) fail("empty key");
        if (!val.empty() && val.front() == '[') {
            if (val.back() != ']') fail("unterminated array");
            json arr = json::array();
            std::string body = val.substr(1, val.size() - 2);
            std::istringstream items(body);
            std::string item;
            while (std::getline(items, item, ',')) {
                item = trim(item);
                if (!item.empty()) arr.push_back(parse_scalar(item));
            }
            (*table)[key] = arr;
        } else {
            (*table)[key] = parse_scalar(val);
        }
    }
    return root;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + where + it.key() + "'");
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key))
        throw ConfigError("missing key '" + where + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for key '" + where + key + "'");
    }
}

template <typename T>
T optional_or(const json& obj, const std::string& key, T fallback,
              const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for key '" + where + key + "'");
    }
}

coupling::Ensemble parse_ensemble(const std::string& s) {
    if (s == "iid-gaussian") return coupling::Ensemble::IidGaussian;
    if (s == "row-orthogonal") return coupling::Ensemble::RowOrthogonal;
    if (s == "geometric") return coupling::Ensemble::Geometric;
    throw ConfigError("unknown ensemble '" + s + "'");
}

oamp::Filter parse_filter(const std::string& s) {
    if (s == "lmmse") return oamp::Filter::Lmmse;
    if (s == "mf") return oamp::Filter::Mf;
    if (s == "zf") return oamp::Filter::Zf;
    throw ConfigError("unknown filter '" + s + "'");
}

SystemConfig parse_system(const json& obj) {
    reject_unknown(obj,
                   {"L", "W", "N", "M", "ensemble", "kappa", "prior", "rho",
                    "snr_db", "seed"},
                   "system.");
    SystemConfig sys;
    sys.l = require<int>(obj, "L", "system.");
    sys.w = require<int>(obj, "W", "system.");
    sys.n = require<int>(obj, "N", "system.");
    sys.m = require<int>(obj, "M", "system.");
    sys.ensemble =
        parse_ensemble(require<std::string>(obj, "ensemble", "system."));
    sys.kappa = optional_or<double>(obj, "kappa", 1.0, "system.");
    const std::string prior =
        optional_or<std::string>(obj, "prior", "bg", "system.");
    if (prior == "bg") {
        sys.prior = denoiser::Prior::bernoulli_gaussian(
            require<double>(obj, "rho", "system."));
    } else if (prior == "gaussian") {
        sys.prior = denoiser::Prior::gaussian();
    } else {
        throw ConfigError("unknown prior '" + prior + "'");
    }
    sys.snr_db = require<double>(obj, "snr_db", "system.");
    sys.seed = optional_or<std::uint64_t>(obj, "seed", 1, "system.");
    return sys;
}

}  // namespace

double SystemConfig::sigma2() const { return std::pow(10.0, -snr_db / 10.0); }

ExperimentConfig parse_config_text(const std::string& text, bool is_toml) {
    json root;
    if (is_toml) {
        root = toml_to_json(text);
    } else {
        try {
            root = json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("json parse failure: ") + e.what());
        }
    }
    reject_unknown(root, {"system", "simulate", "se", "potential", "threshold"},
                   "");
    ExperimentConfig cfg;
    if (!root.contains("system")) throw ConfigError("missing key 'system'");
    cfg.system = parse_system(root["system"]);

    if (root.contains("simulate")) {
        const auto& obj = root["simulate"];
        reject_unknown(obj, {"algo", "T", "trials", "zeta", "filter"},
                       "simulate.");
        const std::string algo =
            optional_or<std::string>(obj, "algo", "oamp", "simulate.");
        if (algo == "oamp") cfg.simulate.algo = Algo::Oamp;
        else if (algo == "lm-oamp") cfg.simulate.algo = Algo::LmOamp;
        else if (algo == "amp") cfg.simulate.algo = Algo::Amp;
        else throw ConfigError("unknown algo '" + algo + "'");
        cfg.simulate.iterations = optional_or<int>(obj, "T", 200, "simulate.");
        cfg.simulate.trials = optional_or<int>(obj, "trials", 1, "simulate.");
        cfg.simulate.zeta = optional_or<double>(obj, "zeta", 1.0, "simulate.");
        cfg.simulate.filter = parse_filter(
            optional_or<std::string>(obj, "filter", "lmmse", "simulate."));
    }
    if (root.contains("se")) {
        const auto& obj = root["se"];
        reject_unknown(obj, {"kind", "T", "tol", "filter"}, "se.");
        const std::string kind =
            optional_or<std::string>(obj, "kind", "bayes", "se.");
        if (kind == "bayes") cfg.se.kind = se::SeKind::Bayes;
        else if (kind == "oamp") cfg.se.kind = se::SeKind::Oamp;
        else if (kind == "lm") cfg.se.kind = se::SeKind::Lm;
        else if (kind == "approx") cfg.se.kind = se::SeKind::Approx;
        else throw ConfigError("unknown se kind '" + kind + "'");
        cfg.se.iterations = optional_or<int>(obj, "T", 1000, "se.");
        cfg.se.tol = optional_or<double>(obj, "tol", 1e-10, "se.");
        cfg.se.filter =
            parse_filter(optional_or<std::string>(obj, "filter", "lmmse", "se."));
    }
    if (root.contains("potential")) {
        const auto& obj = root["potential"];
        reject_unknown(obj, {"grid_n", "delta"}, "potential.");
        cfg.potential.grid_n = optional_or<int>(obj, "grid_n", 2048, "potential.");
        cfg.potential.delta = optional_or<double>(obj, "delta", 0.0, "potential.");
    }
    if (root.contains("threshold")) {
        const auto& obj = root["threshold"];
        reject_unknown(obj,
                       {"mode", "delta_lo", "delta_hi", "tol", "T", "kappas",
                        "widths"},
                       "threshold.");
        const std::string mode =
            optional_or<std::string>(obj, "mode", "coupled", "threshold.");
        if (mode == "bp") cfg.threshold.mode = ThresholdMode::Bp;
        else if (mode == "potential") cfg.threshold.mode = ThresholdMode::Potential;
        else if (mode == "coupled") cfg.threshold.mode = ThresholdMode::Coupled;
        else throw ConfigError("unknown threshold mode '" + mode + "'");
        cfg.threshold.delta_lo =
            optional_or<double>(obj, "delta_lo", 0.0, "threshold.");
        cfg.threshold.delta_hi =
            optional_or<double>(obj, "delta_hi", 1.0, "threshold.");
        cfg.threshold.tol = optional_or<double>(obj, "tol", 1e-4, "threshold.");
        cfg.threshold.iterations = optional_or<int>(obj, "T", 1000, "threshold.");
        cfg.threshold.kappas = optional_or<std::vector<double>>(
            obj, "kappas", {}, "threshold.");
        cfg.threshold.widths =
            optional_or<std::vector<int>>(obj, "widths", {}, "threshold.");
    }
    cfg.raw = root.dump();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const bool is_toml = path.size() >= 5 &&
                         path.compare(path.size() - 5, 5, ".toml") == 0;
    return parse_config_text(buf.str(), is_toml);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    // FNV-1a over the canonical serialized config.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : cfg.raw) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

coupling::CoupledSystem build_from_config(const SystemConfig& sys,
                                          std::uint64_t seed_override) {
    const auto base = coupling::BaseMatrix::uniform(sys.l, sys.w);
    return coupling::build_system(base, sys.n, sys.m, sys.ensemble, sys.kappa,
                                  sys.prior, sys.sigma2(), seed_override);
}

se::SeModel model_from_config(const SystemConfig& sys) {
    const auto base = coupling::BaseMatrix::uniform(sys.l, sys.w);
    return se::SeModel::make(base, sys.n, sys.m, sys.ensemble, sys.kappa,
                             sys.prior, sys.sigma2());
}

}  // namespace scoamp::config
