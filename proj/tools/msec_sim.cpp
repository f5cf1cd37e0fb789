// Copyright 2026 The msec-tunnel Authors
// SPDX-License-Identifier: Apache-2.0

// msec-sim: runs a scenario file and writes the transcript and a JSON summary.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mtun/sim/simulator.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deterministic tunnel simulation"};
    std::string scenario_path, transcript_path, summary_path;
    std::optional<std::uint64_t> seed;
    app.add_option("scenario", scenario_path, "scenario JSON file")->required();
    app.add_option("--transcript", transcript_path, "write the event transcript (CSV) here");
    app.add_option("--summary", summary_path, "write the summary (JSON) here instead of standard output");
    app.add_option("--seed", seed, "override the scenario seed");
    CLI11_PARSE(app, argc, argv);

    std::ifstream in(scenario_path);
    if (!in) {
        std::cerr << "msec-sim: cannot read " << scenario_path << '\n';
        return 2;
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        std::cerr << "msec-sim: " << scenario_path << ": not valid JSON\n";
        return 2;
    }
    auto scenario = mtun::sim::scenario_from_json(j);
    if (!scenario) {
        std::cerr << "msec-sim: " << scenario.error() << '\n';
        return 2;
    }
    if (seed) scenario.value().seed = *seed;
    if (!transcript_path.empty()) scenario.value().transcript = true;

    const mtun::sim::ScenarioResult result = mtun::sim::run_scenario(scenario.value());
    if (!transcript_path.empty()) {
        std::ofstream out(transcript_path);
        out << result.transcript_csv();
        if (!out) {
            std::cerr << "msec-sim: cannot write " << transcript_path << '\n';
            return 1;
        }
    }
    const std::string summary = result.summary().dump(2);
    if (summary_path.empty()) {
        std::cout << summary << '\n';
    } else {
        std::ofstream out(summary_path);
        out << summary << '\n';
        if (!out) {
            std::cerr << "msec-sim: cannot write " << summary_path << '\n';
            return 1;
        }
    }
    return 0;
}
