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

#include <stdexcept>
#include <string>

namespace scoamp {

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct DimError : std::runtime_error {
    explicit DimError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& what) : std::runtime_error(what) {}
};

// Extrinsic division in module A degenerated (1 - eta_A below guard).
struct SingularFilter : std::runtime_error {
    explicit SingularFilter(const std::string& what) : std::runtime_error(what) {}
};

// Onsager denominator in module B degenerated.
struct SingularOnsager : std::runtime_error {
    explicit SingularOnsager(const std::string& what) : std::runtime_error(what) {}
};

struct NotPosDef : std::runtime_error {
    explicit NotPosDef(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scoamp
