#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gridmesh/core.hpp"
#include "gridmesh/mesh_io.hpp"
#include "gridmesh/metrics.hpp"
#include "gridmesh/oracle.hpp"
#include "gridmesh/reconstruct.hpp"
#include "gridmesh/toy2d.hpp"
#include "gridmesh/trainer.hpp"

namespace gridmesh {

namespace cli {

inline void emit_json(const nlohmann::json& j, const std::string& out_path, std::ostream& os) {
    std::string text = j.dump(2);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw DataError("cannot write " + out_path);
        f << text << "\n";
    }
    os << text << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainCli {
    std::vector<std::string> shapes;
    std::string out_dir = "run";
    TrainConfig cfg;
};

inline int cmd_train(const TrainCli& args, std::ostream& os) {
    std::vector<ImplicitShape> shapes;
    for (const std::string& spec : args.shapes) shapes.push_back(parse_shape_spec(spec));

    std::filesystem::create_directories(args.out_dir);
    const std::string ckpt_path = args.out_dir + "/checkpoint.json";
    const std::string log_path = args.out_dir + "/train_log.jsonl";
    std::ofstream log(log_path);
    if (!log) throw DataError("cannot write " + log_path);

    TrainResult result = train(shapes, args.cfg, [&](const EpochLog& entry, const PairModel& model) {
        log << entry.to_json().dump() << "\n";
        log.flush();
        std::ofstream ckpt(ckpt_path);
        if (!ckpt) throw DataError("cannot write " + ckpt_path);
        ckpt << checkpoint_json(model, {{"train_config", args.cfg.to_json()}}).dump() << "\n";
    });

    nlohmann::json summary{{"checkpoint", ckpt_path},
                           {"log", log_path},
                           {"epochs", args.cfg.epochs},
                           {"final", result.logs.empty() ? nlohmann::json() : result.logs.back().to_json()}};
    os << summary.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

struct ReconstructCli {
    std::string shape_spec;
    std::string cloud_path;
    std::string checkpoint;
    bool oracle = false;
    int cloud_size = 3000;
    std::uint64_t seed = 0;
    std::string out_path = "mesh.obj";
    std::string edge_csv;
    bool audit = false;
    ReconstructOptions opt;
};

inline int cmd_reconstruct(const ReconstructCli& args, std::ostream& os) {
    if (args.shape_spec.empty() && args.cloud_path.empty())
        throw UsageError("reconstruct needs --shape or --cloud");
    if (!args.oracle && args.checkpoint.empty())
        throw UsageError("reconstruct needs --checkpoint or --oracle");
    if (args.oracle && args.shape_spec.empty())
        throw UsageError("--oracle requires --shape");

    std::optional<ImplicitShape> shape;
    if (!args.shape_spec.empty()) shape = parse_shape_spec(args.shape_spec);

    PointCloud cloud;
    if (!args.cloud_path.empty()) {
        cloud = read_cloud(args.cloud_path);
    } else {
        Rng rng(args.seed);
        cloud = shape->sample_surface(args.cloud_size, rng.raw());
    }

    std::unique_ptr<PairPredictor> predictor;
    std::optional<PairModel> model;
    if (args.oracle) {
        predictor = std::make_unique<OraclePredictor>(*shape);
    } else {
        std::ifstream f(args.checkpoint);
        if (!f) throw DataError("cannot open " + args.checkpoint);
        nlohmann::json j;
        f >> j;
        model = model_from_checkpoint_json(j);
        predictor = std::make_unique<ModelPredictor>(*model, cloud);
    }

    ReconstructOutput out = reconstruct(cloud, *predictor, args.opt);
    write_mesh(out.mesh, args.out_path);
    if (!args.edge_csv.empty()) write_edge_csv(args.edge_csv, out.lattice, out.solved);

    nlohmann::json j{{"mesh", args.out_path},
                     {"vertices", out.mesh.vertices.size()},
                     {"triangles", out.mesh.triangle_count()},
                     {"raw_triangles", out.raw_triangles},
                     {"resolution", args.opt.resolution},
                     {"cell", out.lattice.cell()},
                     {"solved_edges", out.solved.size()}};
    if (args.audit) j["topology"] = audit_topology(out.mesh).to_json();
    os << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalCli {
    std::string rec_path;
    std::string shape_spec;
    std::string gt_mesh_path;
    int samples = 20000;
    std::uint64_t seed = 0;
    std::string out_path;
};

inline int cmd_eval(const EvalCli& args, std::ostream& os) {
    if (args.shape_spec.empty() == args.gt_mesh_path.empty())
        throw UsageError("eval needs exactly one of --shape or --gt-mesh");
    TriangleMesh rec = read_mesh(args.rec_path);
    EvalReport report;
    if (!args.shape_spec.empty()) {
        report = evaluate(rec, parse_shape_spec(args.shape_spec), args.samples, args.seed);
    } else {
        report = evaluate(rec, read_mesh(args.gt_mesh_path), args.samples, args.seed);
    }
    emit_json(report.to_json(), args.out_path, os);
    return 0;
}

// ---------------------------------------------------------------------------
// artifact-study: ground-truth signs with three alpha sources
// ---------------------------------------------------------------------------

struct ArtifactStudyCli {
    std::string shape_spec;
    int resolution = 64;
    int cloud_size = 3000;
    int samples = 20000;
    std::uint64_t seed = 0;
    std::string out_path;
};

inline int cmd_artifact_study(const ArtifactStudyCli& args, std::ostream& os) {
    if (args.shape_spec.empty()) throw UsageError("artifact-study needs --shape");
    ImplicitShape shape = parse_shape_spec(args.shape_spec);
    Rng rng(args.seed);
    PointCloud cloud = shape.sample_surface(args.cloud_size, rng.raw());
    const std::uint64_t alpha_seed = rng.raw();
    const std::uint64_t eval_seed = rng.raw();

    ReconstructOptions opt;
    opt.resolution = args.resolution;
    opt.postprocess = false;  // isolate crossing-position error

    auto signs = std::make_shared<OraclePredictor>(shape);
    auto run = [&](PairPredictor& predictor) {
        ReconstructOutput out = reconstruct(cloud, predictor, opt);
        EvalReport report = evaluate(out.mesh, shape, args.samples, eval_seed);
        return nlohmann::json{{"cd1", report.cd1}, {"nc", report.nc}};
    };

    nlohmann::json j;
    j["resolution"] = args.resolution;
    j["seed"] = args.seed;
    j["samples"] = args.samples;
    {
        OraclePredictor gt(shape);
        j["gt_alpha"] = run(gt);
    }
    {
        RandomAlphaPredictor corrupted(signs, alpha_seed);
        j["random_alpha"] = run(corrupted);
    }
    {
        UdfRatioAlphaPredictor ratio(signs, shape);
        j["gifs_alpha"] = run(ratio);
    }
    emit_json(j, args.out_path, os);
    return 0;
}

// ---------------------------------------------------------------------------
// toy2d
// ---------------------------------------------------------------------------

struct Toy2dCli {
    std::string field = "both";  // sdf | udf | both
    std::string udf_head = "softplus";
    Toy2dConfig cfg;
    std::string out_path;
};

inline int cmd_toy2d(const Toy2dCli& args, std::ostream& os) {
    if (args.field != "sdf" && args.field != "udf" && args.field != "both")
        throw UsageError("--field must be sdf, udf, or both");
    Toy2dConfig cfg = args.cfg;
    if (args.udf_head == "abs")
        cfg.udf_head = UdfHead::Abs;
    else if (args.udf_head == "softplus")
        cfg.udf_head = UdfHead::Softplus;
    else
        throw UsageError("--udf-head must be abs or softplus");
    nlohmann::json j;
    j["config"] = {{"n_points", cfg.n_points},
                   {"steps", cfg.steps},
                   {"batch", cfg.batch},
                   {"lr", cfg.lr},
                   {"circle_radius", cfg.circle_radius},
                   {"domain_half", cfg.domain_half},
                   {"udf_head", args.udf_head},
                   {"seed", cfg.seed}};
    if (args.field != "udf") j["sdf"] = fit_toy2d_field(false, cfg).to_json();
    if (args.field != "sdf") j["udf"] = fit_toy2d_field(true, cfg).to_json();
    emit_json(j, args.out_path, os);
    return 0;
}

}  // namespace cli

// ---------------------------------------------------------------------------
// Entry point. Exit codes: 0 success, 1 usage, 2 data error, 3 numerical.
// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& os = std::cout,
                   std::ostream& err = std::cerr) {
    apply_thread_cap();
    CLI::App app{"grid-based surface reconstruction from point clouds"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; command-line flags win");
    app.allow_config_extras(false);

    cli::TrainCli train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train the pair-prediction model");
    train_cmd->add_option("--shape", train_args.shapes, "training shape spec (repeatable)")
        ->required();
    train_cmd->add_option("--out", train_args.out_dir, "output directory");
    train_cmd->add_option("--epochs", train_args.cfg.epochs);
    train_cmd->add_option("--seed", train_args.cfg.seed);
    train_cmd->add_option("--pairs-per-iter", train_args.cfg.pairs_per_iter);
    train_cmd->add_option("--iters-per-shape", train_args.cfg.iters_per_shape);
    train_cmd->add_option("--lr", train_args.cfg.lr0);
    train_cmd->add_option("--sign-weight", train_args.cfg.sign_weight);
    train_cmd->add_option("--alpha-weight", train_args.cfg.alpha_weight);
    train_cmd->add_option("--cloud-size", train_args.cfg.cloud_points);
    train_cmd->add_option("--train-res", train_args.cfg.train_resolution);
    train_cmd->add_option("--holdout-pairs", train_args.cfg.holdout_pairs);
    train_cmd->add_option("--feature-dim", train_args.cfg.model.feature_dim);
    train_cmd->add_option("--attn-neighbors", train_args.cfg.model.attn_neighbors);
    train_cmd->add_option("--attn-hidden", train_args.cfg.model.attn_hidden);
    train_cmd->add_option("--interp-neighbors", train_args.cfg.model.interp_neighbors);

    cli::ReconstructCli rec_args;
    CLI::App* rec_cmd = app.add_subcommand("reconstruct", "reconstruct a mesh from a cloud or shape");
    rec_cmd->add_option("--shape", rec_args.shape_spec, "shape spec (oracle input and/or cloud source)");
    rec_cmd->add_option("--cloud", rec_args.cloud_path, "input point cloud (xyz/ply)");
    rec_cmd->add_option("--checkpoint", rec_args.checkpoint, "model checkpoint");
    rec_cmd->add_flag("--oracle", rec_args.oracle, "use ground-truth labels instead of a model");
    rec_cmd->add_option("--res", rec_args.opt.resolution);
    rec_cmd->add_option("--seed", rec_args.seed);
    rec_cmd->add_option("--cloud-size", rec_args.cloud_size);
    rec_cmd->add_option("--dilation", rec_args.opt.dilation);
    rec_cmd->add_option("--out", rec_args.out_path, "output mesh path (obj/ply)");
    rec_cmd->add_flag("--no-postprocess",
                      [&rec_args](std::int64_t) { rec_args.opt.postprocess = false; },
                      "skip the triangle filter");
    rec_cmd->add_option("--k", rec_args.opt.postprocess_k, "triangle filter neighborhood");
    rec_cmd->add_option("--threshold", rec_args.opt.postprocess_threshold, "triangle filter cutoff");
    rec_cmd->add_option("--edge-csv", rec_args.edge_csv, "dump per-edge solutions to CSV");
    rec_cmd->add_flag("--audit", rec_args.audit, "include a topology audit in the report");

    cli::EvalCli eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a reconstruction");
    eval_cmd->add_option("--rec", eval_args.rec_path, "reconstructed mesh")->required();
    eval_cmd->add_option("--shape", eval_args.shape_spec, "ground-truth shape spec");
    eval_cmd->add_option("--gt-mesh", eval_args.gt_mesh_path, "ground-truth mesh file");
    eval_cmd->add_option("--samples", eval_args.samples);
    eval_cmd->add_option("--seed", eval_args.seed);
    eval_cmd->add_option("--out", eval_args.out_path, "write the report here as well");

    cli::ArtifactStudyCli study_args;
    CLI::App* study_cmd =
        app.add_subcommand("artifact-study", "ground-truth signs with varied crossing positions");
    study_cmd->add_option("--shape", study_args.shape_spec)->required();
    study_cmd->add_option("--res", study_args.resolution);
    study_cmd->add_option("--seed", study_args.seed);
    study_cmd->add_option("--samples", study_args.samples);
    study_cmd->add_option("--cloud-size", study_args.cloud_size);
    study_cmd->add_option("--out", study_args.out_path);

    cli::Toy2dCli toy_args;
    CLI::App* toy_cmd = app.add_subcommand("toy2d", "2D circle distance-field fitting");
    toy_cmd->add_option("--field", toy_args.field, "sdf, udf, or both");
    toy_cmd->add_option("--seed", toy_args.cfg.seed);
    toy_cmd->add_option("--steps", toy_args.cfg.steps);
    toy_cmd->add_option("--batch", toy_args.cfg.batch);
    toy_cmd->add_option("--points", toy_args.cfg.n_points);
    toy_cmd->add_option("--lr", toy_args.cfg.lr);
    toy_cmd->add_option("--radius", toy_args.cfg.circle_radius);
    toy_cmd->add_option("--udf-head", toy_args.udf_head, "abs or softplus");
    toy_cmd->add_option("--out", toy_args.out_path);

    try {
        app.parse(argc, argv);
        if (train_cmd->parsed()) return cli::cmd_train(train_args, os);
        if (rec_cmd->parsed()) return cli::cmd_reconstruct(rec_args, os);
        if (eval_cmd->parsed()) return cli::cmd_eval(eval_args, os);
        if (study_cmd->parsed()) return cli::cmd_artifact_study(study_args, os);
        if (toy_cmd->parsed()) return cli::cmd_toy2d(toy_args, os);
        throw UsageError("no subcommand given");
    } catch (const CLI::CallForHelp& e) {
        os << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        os << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace gridmesh
