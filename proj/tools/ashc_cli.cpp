// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ashc/commands.hpp"

int main(int argc, char** argv) {
    namespace cli = ashc::cli;

    CLI::App app{"Hierarchical control of a Cuk converter through a certified abstraction"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config = "config/cuk.cfg";
    std::string out = "out";
    cli::Overrides ov;
    long long grid = 0;
    std::string delta;
    double vinf = 0.0;

    app.add_option("--config", config, "Configuration file")->capture_default_str();
    app.add_option("--out", out, "Output directory")->capture_default_str();
    auto* grid_opt = app.add_option("--grid", grid, "Points of the d_bar scan grid (>= 2)");
    auto* delta_opt =
        app.add_option("--delta", delta, "Input matrix of the abstraction")->check(CLI::IsMember({"unit", "redesigned"}));
    auto* vinf_opt = app.add_option("--vinf", vinf, "Bound on the abstract input magnitude");
    app.add_flag("--full-resolution", ov.full_resolution, "Write every integration step to the CSV");

    app.add_subcommand("verify", "Certificate, invariance, m-relation and dissipation checks");
    app.add_subcommand("scan-bound", "Scan ||vartheta|| over the domain and report d_bar");
    app.add_subcommand("bound", "Asymptotic and transient output-error bounds");
    app.add_subcommand("sim-hier", "Closed-loop run through the interface");
    app.add_subcommand("sim-mrel", "Open-loop run with the abstraction driven through the m-relation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitUsage;
    }

    if (*grid_opt) ov.grid = grid;
    if (*delta_opt) ov.delta = delta;
    if (*vinf_opt) ov.vinf = vinf;

    const std::string command = app.get_subcommands().front()->get_name();
    return cli::run_command(command, config, out, ov, std::cout, std::cerr);
}
