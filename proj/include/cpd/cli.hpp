// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpd/dim_tree.hpp"
#include "cpd/io.hpp"
#include "cpd/kruskal.hpp"
#include "cpd/solvers.hpp"
#include "cpd/synth.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

namespace cli_detail {

struct SynthArgs {
    std::vector<std::size_t> dims;
    std::size_t rank = 1;
    std::vector<double> collinearity;
    double l1 = 0.0, l2 = 0.0;
    std::uint64_t seed = 0;
    std::string output;
    std::string truth;
};

struct DecomposeArgs {
    std::string input;
    std::string alg = "als";
    std::size_t rank = 1;
    std::size_t iters = 50;
    double tol = 1.0;
    std::uint64_t seed = 0;
    std::string trace;
    std::string output;
    double alpha = 0.1;
    std::optional<double> beta;
    double gap = 0.03;
};

struct CountsArgs {
    std::size_t order = 3;
    std::vector<std::size_t> dims;
    std::size_t rank = 1;
};

inline int run_synth(const SynthArgs& a, std::ostream& out) {
    SynthSpec spec;
    spec.dims = Shape(a.dims);
    spec.true_rank = a.rank;
    spec.collinearity = a.collinearity;
    if (spec.collinearity.empty()) spec.collinearity.assign(a.dims.size(), 0.0);
    if (spec.collinearity.size() == 1 && a.dims.size() > 1)
        spec.collinearity.assign(a.dims.size(), a.collinearity[0]);
    spec.l1 = a.l1;
    spec.l2 = a.l2;
    spec.seed = a.seed;

    SynthResult result = assemble_noisy_tensor(spec);
    write_tensor_file(a.output, result.tensor);
    if (!a.truth.empty()) write_model_file(a.truth, result.truth, spec.dims);
    out << "wrote " << a.output << " (" << result.tensor.size() << " values)\n";
    return 0;
}

inline int run_decompose(const DecomposeArgs& a, std::ostream& out) {
    const DenseTensor x = read_tensor_file(a.input);

    SolverConfig cfg;
    cfg.rank = a.rank;
    cfg.max_iterations = a.iters;
    cfg.fitness_threshold = a.tol;
    cfg.seed = a.seed;
    cfg.alpha = a.alpha;
    cfg.beta_override = a.beta;
    cfg.activation_gap = a.gap;

    SolveResult result;
    if (a.alg == "als") {
        cfg.algorithm = Algorithm::als;
        result = cp_als(x, cfg);
    } else if (a.alg == "qr" || a.alg == "qr-dt" || a.alg == "qr-br") {
        cfg.algorithm = Algorithm::als_qr;
        cfg.strategy = a.alg == "qr" ? Strategy::naive
                                     : (a.alg == "qr-dt" ? Strategy::dim_tree
                                                         : Strategy::branch_reuse);
        result = cp_als_qr(x, cfg);
    } else if (a.alg == "qr-bre") {
        result = als_qr_bre(x, cfg);
    } else {
        throw CLI::ValidationError("--alg", "unknown algorithm " + a.alg);
    }

    if (!a.output.empty()) write_model_file(a.output, result.model, x.shape());
    if (!a.trace.empty()) write_trace_file(a.trace, result.trace);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", result.trace.back().fitness);
    out << "final_fitness " << buf << "\n";
    return 0;
}

inline int run_counts(const CountsArgs& a, std::ostream& out) {
    const std::vector<std::uint64_t> expected =
        a.order == 3 ? std::vector<std::uint64_t>{9, 6, 4} : std::vector<std::uint64_t>{12, 6, 4};
    out << "order " << a.order << "  dims ";
    for (std::size_t k = 0; k < a.dims.size(); ++k)
        out << (k ? "," : "") << a.dims[k];
    out << "  rank " << a.rank << "  (first 3 iterations)\n";

    bool counts_ok = true;
    const Strategy strategies[] = {Strategy::naive, Strategy::dim_tree, Strategy::branch_reuse};
    for (std::size_t s = 0; s < 3; ++s) {
        const Schedule schedule = build_schedule(a.order, strategies[s], 3);
        const CostReport measured = measured_cost(schedule, a.dims, a.rank, 3);
        const std::uint64_t closed = closed_form_cost(a.order, strategies[s], a.dims, a.rank);
        out << strategy_name(strategies[s]) << ": root_ttms=" << measured.root_ttm_count
            << " (expected " << expected[s] << ")  measured_flops=" << measured.total_flops
            << "  closed_form_flops=" << closed << "\n";
        for (const auto& [key, bucket] : measured.categories)
            out << "  " << CostReport::category_label(key, a.order) << " x" << bucket.count
                << " = " << bucket.flops << "\n";
        if (measured.root_ttm_count != expected[s]) counts_ok = false;
    }
    if (!counts_ok) {
        std::cerr << "error: measured root-TTM counts deviate from expected values\n";
        return 1;
    }
    return 0;
}

inline int run_info(const std::string& path, std::ostream& out) {
    const std::vector<unsigned char> bytes = read_file(path);
    if (bytes.size() >= 4 && bytes[0] == 'C' && bytes[1] == 'P' && bytes[2] == 'D' &&
        bytes[3] == 'T') {
        const DenseTensor t = decode_tensor(bytes);
        out << "tensor file, version 1, order " << t.order() << ", dims ";
        for (std::size_t k = 0; k < t.order(); ++k)
            out << (k ? "x" : "") << t.shape().extent(k);
        out << ", " << t.size() << " values\n";
        return 0;
    }
    if (bytes.size() >= 4 && bytes[0] == 'C' && bytes[1] == 'P' && bytes[2] == 'D' &&
        bytes[3] == 'F') {
        const DecodedModel m = decode_model(bytes);
        out << "model file, version 1, order " << m.model.order() << ", rank "
            << m.model.rank() << ", dims ";
        for (std::size_t k = 0; k < m.shape.order(); ++k)
            out << (k ? "x" : "") << m.shape.extent(k);
        out << "\n";
        return 0;
    }
    throw format_error("unrecognized file magic in " + path);
}

}  // namespace cli_detail

/// Command-line entry point. Exit codes: 0 success, 2 I/O failure,
/// 3 malformed file, 4 numerical failure, otherwise nonzero for bad flags
/// or count deviations.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout) {
    CLI::App app{"dense CP decomposition toolkit"};
    app.require_subcommand(1);

    cli_detail::SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic tensor");
    synth->add_option("--dims", synth_args.dims, "mode extents")->required()->delimiter(',');
    synth->add_option("--rank", synth_args.rank, "true rank")->required();
    synth->add_option("--collinearity", synth_args.collinearity,
                      "per-mode factor collinearity in [0,1)")
        ->delimiter(',');
    synth->add_option("--l1", synth_args.l1, "homoscedastic noise level in [0,100)");
    synth->add_option("--l2", synth_args.l2, "heteroscedastic noise level in [0,100)");
    synth->add_option("--seed", synth_args.seed, "generator seed");
    synth->add_option("-o,--output", synth_args.output, "output tensor file")->required();
    synth->add_option("--truth", synth_args.truth, "optional ground-truth model file");

    cli_detail::DecomposeArgs dec_args;
    auto* dec = app.add_subcommand("decompose", "run a CP decomposition");
    dec->add_option("-i,--input", dec_args.input, "input tensor file")->required();
    dec->add_option("--alg", dec_args.alg, "als | qr | qr-dt | qr-br | qr-bre")->required();
    dec->add_option("--rank", dec_args.rank, "decomposition rank")->required();
    dec->add_option("--iters", dec_args.iters, "maximum sweeps");
    dec->add_option("--tol", dec_args.tol, "stop once fitness reaches this value");
    dec->add_option("--seed", dec_args.seed, "initialization seed");
    dec->add_option("--trace", dec_args.trace, "write per-sweep trace CSV here");
    dec->add_option("-o,--output", dec_args.output, "write the model file here");
    dec->add_option("--alpha", dec_args.alpha, "extrapolation alpha (qr-bre)");
    double beta_value = 0.0;
    auto* beta_opt = dec->add_option("--beta", beta_value, "fixed extrapolation beta (qr-bre)");
    dec->add_option("--gap", dec_args.gap, "extrapolation activation gap (qr-bre)");

    cli_detail::CountsArgs counts_args;
    auto* counts = app.add_subcommand("counts", "contraction cost accounting");
    counts->add_option("--order", counts_args.order, "tensor order (3 or 4)")
        ->required()
        ->check(CLI::IsMember({3, 4}));
    counts->add_option("--dims", counts_args.dims, "mode extents")->required()->delimiter(',');
    counts->add_option("--rank", counts_args.rank, "decomposition rank")->required();

    std::string info_path;
    auto* info = app.add_subcommand("info", "print file header metadata");
    info->add_option("-i,--input", info_path, "file to inspect")->required();

    try {
        // CLI11's vector overload consumes the arguments back to front.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*synth) return cli_detail::run_synth(synth_args, out);
        if (*dec) {
            if (beta_opt->count() > 0) dec_args.beta = beta_value;
            return cli_detail::run_decompose(dec_args, out);
        }
        if (*counts) {
            if (counts_args.dims.size() != counts_args.order)
                throw CLI::ValidationError("--dims", "need one extent per mode");
            return cli_detail::run_counts(counts_args, out);
        }
        if (*info) return cli_detail::run_info(info_path, out);
    } catch (const file_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const singular_system_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const singular_triangular_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const generation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace cpd
