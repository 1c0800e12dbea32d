// Copyright 2026 The cavsync Authors
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

// cavsync: batch front end.
//
//   cavsync run <config> [--out DIR] [--seed N] [--threads N] [--method a,b] [--quiet]
//   cavsync validate <config> [same overrides]
//
// Flags override values from the file, which override built-in defaults.
// Exit status: 0 success, 1 runtime or I/O failure, 2 invalid configuration.

#include "cavsync.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Overrides {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<std::string> methods;
};

cavsync::RunSpec load(const std::string& path, const Overrides& o) {
    auto spec = cavsync::load_run_spec(path);
    if (o.out) spec.output = *o.out;
    if (o.seed) spec.seed = *o.seed;
    if (o.threads) spec.threads = *o.threads;
    if (!o.methods.empty()) {
        spec.methods.clear();
        for (const auto& m : o.methods) spec.methods.push_back(cavsync::method_from_string(m));
    }
    return spec;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--out", o.out, "output directory (run.output)");
    cmd->add_option("--seed", o.seed, "random seed (run.seed)");
    cmd->add_option("--threads", o.threads, "worker threads (run.threads)")->check(CLI::PositiveNumber);
    cmd->add_option("--method", o.methods,
                    "methods to run, replacing run.methods: time_full, time_rwa, steady_exact, rate_R, "
                    "rate_Rstar, semiclassical")
        ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavsync: driven dissipative cavity-qubit steady states and sweeps"};
    app.set_version_flag("--version", std::string(cavsync::version));
    app.require_subcommand(1);

    std::string config;
    Overrides ov;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "execute a frequency sweep");
    run->add_option("config", config, "configuration file")->required()->check(CLI::ExistingFile);
    add_overrides(run, ov);
    run->add_flag("--quiet", quiet, "no per-cell progress on stderr");

    auto* val = app.add_subcommand("validate", "static checks without running");
    val->add_option("config", config, "configuration file")->required()->check(CLI::ExistingFile);
    add_overrides(val, ov);

    CLI11_PARSE(app, argc, argv);

    cavsync::RunSpec spec;
    try {
        spec = load(config, ov);
    } catch (const std::exception& e) {
        std::cerr << "cavsync: " << e.what() << "\n";
        return 2;
    }
    const auto report = cavsync::validate_run(spec);
    if (*val) {
        std::cout << report.text();
        return report.ok() ? 0 : 2;
    }
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    if (!report.ok()) {
        std::cerr << report.text();
        return 2;
    }
    try {
        const auto out = cavsync::run_to_directory(spec, !quiet);
        std::size_t failed = 0;
        for (const auto& c : out.result.cells)
            if (c.status.rfind("error", 0) == 0) ++failed;
        std::cout << "wrote " << out.files.size() << " files to " << spec.output << " (" << out.result.computed
                  << " cells computed, " << out.restored << " restored, " << failed << " failed)\n";
    } catch (const std::exception& e) {
        std::cerr << "cavsync: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
