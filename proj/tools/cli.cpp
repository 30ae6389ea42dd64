#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "msg/association.hpp"
#include "msg/dot.hpp"
#include "msg/embedlab.hpp"
#include "msg/errors.hpp"
#include "msg/io.hpp"
#include "msg/metrics.hpp"
#include "msg/scene.hpp"
#include "msg/simulator.hpp"

namespace fs = std::filesystem;

namespace msg::cli {

namespace {

using io::json;
using Clock = std::chrono::steady_clock;

std::string fmt6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string fmt6(const std::optional<double>& x) { return x ? fmt6(*x) : "-"; }

struct Manifest {
  explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::optional<std::uint64_t> seed;
  Clock::time_point start = Clock::now();

  void write(const fs::path& path) const {
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();
    io::write_json(path, {{"command", command},
                          {"config", config},
                          {"inputs", inputs},
                          {"outputs", outputs},
                          {"tool_version", kToolVersion},
                          {"seed", seed ? json(*seed) : json(nullptr)},
                          {"wall_time_s", wall}});
  }
};

fs::path manifest_beside(const fs::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

void prepare_out_dir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!force) throw IoError("output directory " + dir.string() + " exists (use --force to overwrite)");
    if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + " is not a directory");
  } else if (!fs::create_directories(dir, ec) || ec) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

EmbeddingSet read_embeddings(const fs::path& path) {
  const std::string bytes = io::read_file(path);
  return io::decode_embeddings(bytes);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

SimConfig load_sim_config(const std::string& path, std::optional<std::uint64_t> seed) {
  SimConfig cfg;
  if (!path.empty()) io::apply_sim_config(io::read_json(path), cfg);
  if (seed) cfg.seed = *seed;
  cfg.check();
  return cfg;
}

int cmd_simulate(const SimulateOpts& o, std::ostream& out) {
  Manifest m{"simulate"};
  const SimConfig cfg = load_sim_config(o.config, o.seed);
  const fs::path dir = o.out;
  prepare_out_dir(dir, o.force);

  const SimScene sim = simulate(cfg);
  io::write_json(dir / "scene.json", io::scene_to_json(sim.streams.scene));
  io::write_json(dir / "pred_scene.json", io::scene_to_json(sim.streams.pred_scene));
  io::write_json(dir / "gt.graph.json", io::graph_to_json(sim.gt));
  io::write_file_atomic(dir / "emb.msge", io::encode_embeddings(sim.emb));
  // Association thresholds matching the planted embeddings.
  AssocConfig assoc;
  if (sim.oracle_tau_place) assoc.tau_place = *sim.oracle_tau_place;
  io::write_json(dir / "assoc.json", {{"tau_place", assoc.tau_place}, {"tau_object", assoc.tau_object}});

  m.config = io::sim_config_to_json(cfg);
  if (sim.oracle_tau_place) m.config["oracle_tau_place"] = *sim.oracle_tau_place;
  m.inputs = {{"config", o.config.empty() ? json(nullptr) : json(o.config)}};
  m.outputs = {{"scene", "scene.json"}, {"pred_scene", "pred_scene.json"}, {"gt_graph", "gt.graph.json"}, {"embeddings", "emb.msge"}, {"assoc_config", "assoc.json"}};
  m.seed = cfg.seed;
  m.write(dir / "manifest.json");

  out << "scene " << sim.streams.scene.scene_id << ": " << sim.gt.num_places() << " places, " << sim.gt.num_objects()
      << " objects, " << sim.gt.pp_edges().size() << " pp edges, " << sim.gt.po_edges().size() << " po edges\n";
  if (sim.oracle_tau_place) out << "oracle tau_place " << fmt6(*sim.oracle_tau_place) << "\n";
  if (!sim.orthogonal_latents) out << "warning: n_objects > dim, object latents are not orthogonal\n";
  return 0;
}

// ---------------------------------------------------------------------------
// build-gt

struct BuildGtOpts {
  std::string scene;
  std::string out;
  double trans = 1.0;
  double rot = 1.0;
};

int cmd_build_gt(const BuildGtOpts& o, std::ostream& out) {
  Manifest m{"build-gt"};
  const auto scene = io::scene_from_json(io::read_json(o.scene));
  GtThresholds th{o.trans, o.rot};
  th.check();
  const MSGraph g = build_gt_graph(scene, th);
  io::write_json(o.out, io::graph_to_json(g));
  m.config = {{"trans_thresh", o.trans}, {"rot_thresh", o.rot}};
  m.inputs = {{"scene", o.scene}};
  m.outputs = {{"graph", o.out}};
  m.write(manifest_beside(o.out));
  out << "places " << g.num_places() << ", objects " << g.num_objects() << ", pp edges " << g.pp_edges().size()
      << ", po edges " << g.po_edges().size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// associate

struct AssociateOpts {
  std::string scene;
  std::string emb;
  std::string config;
  double tau_place = 0.3;
  double tau_object = 0.2;
  std::string bank_update = "running_mean";
  std::string out_graph;
  std::string out_dets;
  CLI::Option* tau_place_opt = nullptr;
  CLI::Option* tau_object_opt = nullptr;
  CLI::Option* bank_opt = nullptr;
};

BankUpdate parse_bank_update(const std::string& s) {
  if (s == "running_mean") return BankUpdate::running_mean;
  if (s == "replace") return BankUpdate::replace;
  throw ValidationError("bank update must be running_mean or replace");
}

int cmd_associate(const AssociateOpts& o, std::ostream& out) {
  Manifest m{"associate"};
  AssocConfig cfg;
  std::string bank = o.bank_update;
  if (!o.config.empty()) {
    const json j = io::read_json(o.config);
    if (j.contains("tau_place")) cfg.tau_place = j.at("tau_place").get<double>();
    if (j.contains("tau_object")) cfg.tau_object = j.at("tau_object").get<double>();
    if (j.contains("bank_update")) bank = j.at("bank_update").get<std::string>();
  }
  if (o.tau_place_opt->count() || o.config.empty()) cfg.tau_place = o.tau_place;
  if (o.tau_object_opt->count() || o.config.empty()) cfg.tau_object = o.tau_object;
  if (o.bank_opt->count()) bank = o.bank_update;
  cfg.bank_update = parse_bank_update(bank);
  cfg.check();

  const auto scene = io::scene_from_json(io::read_json(o.scene));
  const auto emb = read_embeddings(o.emb);
  if (emb.frames.size() != scene.frames.size()) {
    throw ValidationError("embedding file has " + std::to_string(emb.frames.size()) + " frames, scene has " +
                          std::to_string(scene.frames.size()));
  }
  const auto pred = build_pred_graph(emb, cfg, detections_by_frame(scene));
  io::write_json(o.out_graph, io::graph_to_json(pred.graph));
  io::write_json(o.out_dets, io::detections_to_json(pred.detections));

  m.config = {{"tau_place", cfg.tau_place}, {"tau_object", cfg.tau_object}, {"bank_update", bank}};
  m.inputs = {{"scene", o.scene}, {"embeddings", o.emb}};
  m.outputs = {{"graph", o.out_graph}, {"detections", o.out_dets}};
  m.write(manifest_beside(o.out_graph));
  out << "predicted " << pred.graph.num_objects() << " objects, " << pred.graph.pp_edges().size() << " pp edges, "
      << pred.graph.po_edges().size() << " po edges\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::string gt_graph, pred_graph, gt_scene, pred_dets, emb, report, dir;
};

struct SceneInputs {
  std::string name;
  fs::path gt_graph, pred_graph, gt_scene, pred_dets;
  std::optional<fs::path> emb;
};

EvalReport evaluate_files(const SceneInputs& in, std::ostream& err) {
  const auto gt = io::graph_from_json(io::read_json(in.gt_graph));
  const auto pred = io::graph_from_json(io::read_json(in.pred_graph));
  const auto scene = io::scene_from_json(io::read_json(in.gt_scene));
  const auto dets = io::detections_from_json(io::read_json(in.pred_dets));
  std::optional<Eigen::MatrixXd> sim;
  if (in.emb) {
    const auto emb = read_embeddings(*in.emb);
    if (emb.frames.size() != gt.num_places()) throw ValidationError("embedding frame count differs from gt place count");
    if (gt.pp_edges().empty()) {
      err << "warning: " << in.name << ": gt has no place edges, recall@1 undefined\n";
    } else {
      sim = place_similarity(emb);
    }
  }
  return evaluate(gt, pred, scene, dets, sim);
}

void print_table(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& rows,
                 const std::optional<MeanReport>& mean) {
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %12s %12s %12s\n", "scene", "recall@1", "pp_iou", "po_iou");
  out << line;
  for (const auto& [name, r] : rows) {
    std::snprintf(line, sizeof line, "%-24s %12s %12s %12s\n", name.c_str(), fmt6(r.recall_at_1).c_str(),
                  fmt6(r.pp_iou).c_str(), fmt6(r.po_iou).c_str());
    out << line;
  }
  if (mean) {
    std::snprintf(line, sizeof line, "%-24s %12s %12s %12s\n", "mean", fmt6(mean->recall_at_1).c_str(),
                  fmt6(mean->pp_iou).c_str(), fmt6(mean->po_iou).c_str());
    out << line;
  }
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MSG_NUM_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

int cmd_evaluate(const EvaluateOpts& o, std::ostream& out, std::ostream& err) {
  Manifest m{"evaluate"};
  if (o.dir.empty()) {
    for (const auto* f : {&o.gt_graph, &o.pred_graph, &o.gt_scene, &o.pred_dets}) {
      if (f->empty()) throw ValidationError("--gt-graph, --pred-graph, --gt-scene and --pred-dets are required without --dir");
    }
    SceneInputs in{"scene", o.gt_graph, o.pred_graph, o.gt_scene, o.pred_dets, std::nullopt};
    if (!o.emb.empty()) in.emb = o.emb;
    const EvalReport r = evaluate_files(in, err);
    io::write_json(o.report, io::report_to_json(r));
    m.inputs = {{"gt_graph", o.gt_graph}, {"pred_graph", o.pred_graph}, {"gt_scene", o.gt_scene},
                {"pred_dets", o.pred_dets}, {"embeddings", o.emb.empty() ? json(nullptr) : json(o.emb)}};
    m.outputs = {{"report", o.report}};
    m.write(manifest_beside(o.report));
    print_table(out, {{io::scene_from_json(io::read_json(o.gt_scene)).scene_id, r}}, std::nullopt);
    return 0;
  }

  // Directory mode: one subdirectory per scene, merged in name order.
  std::vector<SceneInputs> scenes;
  std::error_code ec;
  if (!fs::is_directory(o.dir, ec)) throw IoError(o.dir + " is not a directory");
  for (const auto& entry : fs::directory_iterator(o.dir)) {
    if (!entry.is_directory()) continue;
    const fs::path d = entry.path();
    SceneInputs in{d.filename().string(), d / "gt.graph.json", d / "pred.graph.json", d / "scene.json",
                   d / "pred_dets.json", std::nullopt};
    if (fs::exists(d / "emb.msge")) in.emb = d / "emb.msge";
    scenes.push_back(std::move(in));
  }
  std::sort(scenes.begin(), scenes.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  if (scenes.empty()) throw ValidationError("no scene subdirectories in " + o.dir);

  std::vector<std::optional<EvalReport>> results(scenes.size());
  std::vector<std::exception_ptr> errors(scenes.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < scenes.size(); i = next++) {
      try {
        std::ostringstream warn;
        results[i] = evaluate_files(scenes[i], warn);
        if (!warn.str().empty()) {
          std::lock_guard lock(err_mutex);
          err << warn.str();
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < worker_count(scenes.size()); ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const ValidationError& e) {
        throw ValidationError(scenes[i].name + ": " + e.what());
      } catch (const IoError& e) {
        throw IoError(scenes[i].name + ": " + e.what());
      }
    }
  }

  std::vector<EvalReport> reports;
  std::vector<std::pair<std::string, EvalReport>> rows;
  json per_scene = json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    reports.push_back(*results[i]);
    rows.emplace_back(scenes[i].name, *results[i]);
    json r = io::report_to_json(*results[i]);
    r["scene"] = scenes[i].name;
    per_scene.push_back(std::move(r));
  }
  const MeanReport mean = mean_report(reports);
  io::write_json(o.report, {{"scenes", per_scene}, {"mean", io::mean_to_json(mean)}});
  m.inputs = {{"dir", o.dir}};
  m.outputs = {{"report", o.report}};
  m.write(manifest_beside(o.report));
  print_table(out, rows, mean);
  return 0;
}

// ---------------------------------------------------------------------------
// export-dot

struct ExportDotOpts {
  std::string graph, out, match, side = "pred";
};

int cmd_export_dot(const ExportDotOpts& o, std::ostream& out) {
  Manifest m{"export-dot"};
  const auto g = io::graph_from_json(io::read_json(o.graph));
  std::optional<ObjectMatching> matching;
  if (!o.match.empty()) matching = io::report_from_json(io::read_json(o.match)).matching;
  if (o.side != "gt" && o.side != "pred") throw ValidationError("--side must be gt or pred");
  io::write_file_atomic(o.out, to_dot(g, matching, o.side == "gt" ? MatchSide::gt : MatchSide::pred));
  m.inputs = {{"graph", o.graph}, {"match", o.match.empty() ? json(nullptr) : json(o.match)}};
  m.outputs = {{"dot", o.out}};
  m.config = {{"side", o.side}};
  m.write(manifest_beside(o.out));
  out << "wrote " << o.out << " (" << g.num_places() + g.num_objects() << " nodes, "
      << g.pp_edges().size() + g.po_edges().size() << " edges)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// probe

struct ProbeOpts {
  std::string config, probe_config, out, projectors, report;
  std::size_t train_scenes = 8;
  std::size_t eval_scenes = 10;
  std::size_t first_eval_scene = 1000;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<std::size_t> out_dim;
  bool force = false;
};

SimConfig scene_config(const SimConfig& base, std::size_t index) {
  SimConfig c = base;
  c.seed = scene_seed(base.seed, index);
  return c;
}

int cmd_probe_train(const ProbeOpts& o, std::ostream& out) {
  Manifest m{"probe train"};
  const SimConfig sim_cfg = load_sim_config(o.config, o.seed);
  ProbeConfig cfg;
  cfg.in_dim = sim_cfg.dim;
  cfg.out_dim = sim_cfg.dim;
  cfg.seed = sim_cfg.seed;
  if (!o.probe_config.empty()) io::apply_probe_config(io::read_json(o.probe_config), cfg);
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.learning_rate) cfg.learning_rate = *o.learning_rate;
  if (o.out_dim) cfg.out_dim = *o.out_dim;
  if (o.seed) cfg.seed = *o.seed;
  if (cfg.in_dim != sim_cfg.dim) throw ValidationError("probe in_dim must equal the simulated embedding dim");
  cfg.check();
  prepare_out_dir(o.out, o.force);

  std::vector<ProbeScene> scenes;
  for (std::size_t i = 0; i < o.train_scenes; ++i) {
    SimScene s = simulate(scene_config(sim_cfg, i));
    scenes.push_back({std::move(s.emb), std::move(s.gt), std::move(s.streams.pred_sources)});
  }
  const TrainedProbe probe = train_probe(scenes, cfg);
  const fs::path dir = o.out;
  io::write_json(dir / "place_head.json", io::projector_to_json(probe.place_head));
  io::write_json(dir / "object_head.json", io::projector_to_json(probe.object_head));

  m.config = {{"simulation", io::sim_config_to_json(sim_cfg)}, {"probe", io::probe_config_to_json(cfg)},
              {"train_scenes", o.train_scenes}};
  m.inputs = {{"config", o.config.empty() ? json(nullptr) : json(o.config)},
              {"probe_config", o.probe_config.empty() ? json(nullptr) : json(o.probe_config)}};
  m.outputs = {{"place_head", "place_head.json"}, {"object_head", "object_head.json"},
               {"epoch_loss", probe.epoch_loss}, {"epoch_coding_rate", probe.epoch_coding_rate}};
  m.seed = cfg.seed;
  m.write(dir / "manifest.json");
  out << "trained " << cfg.epochs << " epochs on " << scenes.size() << " scenes";
  if (!probe.epoch_loss.empty()) out << ", final loss " << fmt6(probe.epoch_loss.back());
  out << "\n";
  return 0;
}

int cmd_probe_eval(const ProbeOpts& o, std::ostream& out) {
  Manifest m{"probe eval"};
  const SimConfig sim_cfg = load_sim_config(o.config, o.seed);
  const fs::path dir = o.projectors;
  const Projector place_head = io::projector_from_json(io::read_json(dir / "place_head.json"));
  const Projector object_head = io::projector_from_json(io::read_json(dir / "object_head.json"));
  if (static_cast<std::size_t>(place_head.weights.cols()) != sim_cfg.dim ||
      static_cast<std::size_t>(object_head.weights.cols()) != sim_cfg.dim) {
    throw ValidationError("projector in_dim does not match the simulated embedding dim");
  }

  std::vector<EvalReport> raw, probed;
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (std::size_t i = 0; i < o.eval_scenes; ++i) {
    const SimConfig c = scene_config(sim_cfg, o.first_eval_scene + i);
    const EndToEnd base = run_end_to_end(c);
    raw.push_back(base.report);

    AssocConfig assoc;
    if (base.sim.oracle_tau_place) assoc.tau_place = *base.sim.oracle_tau_place;
    const EmbeddingSet projected = apply_probe(base.sim.emb, place_head, object_head);
    const auto pred = build_pred_graph(projected, assoc, detections_by_frame(base.sim.streams.pred_scene));
    std::optional<Eigen::MatrixXd> sim;
    if (!base.sim.gt.pp_edges().empty()) sim = pred.similarity;
    probed.push_back(evaluate(base.sim.gt, pred.graph, base.sim.streams.scene, pred.detections, sim));
    rows.emplace_back("raw/" + base.sim.streams.scene.scene_id, raw.back());
    rows.emplace_back("probed/" + base.sim.streams.scene.scene_id, probed.back());
  }
  const MeanReport raw_mean = mean_report(raw);
  const MeanReport probed_mean = mean_report(probed);
  print_table(out, rows, std::nullopt);
  out << "raw mean:    pp_iou " << fmt6(raw_mean.pp_iou) << ", po_iou " << fmt6(raw_mean.po_iou) << "\n";
  out << "probed mean: pp_iou " << fmt6(probed_mean.pp_iou) << ", po_iou " << fmt6(probed_mean.po_iou) << "\n";

  if (!o.report.empty()) {
    io::write_json(o.report, {{"raw", io::mean_to_json(raw_mean)}, {"probed", io::mean_to_json(probed_mean)}});
    m.config = {{"simulation", io::sim_config_to_json(sim_cfg)}, {"eval_scenes", o.eval_scenes},
                {"first_eval_scene", o.first_eval_scene}};
    m.inputs = {{"projectors", o.projectors}};
    m.outputs = {{"report", o.report}};
    m.seed = sim_cfg.seed;
    m.write(manifest_beside(o.report));
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiview scene graph toolkit: build, predict and score place+object graphs"};
  app.require_subcommand(1);
  std::function<int()> action;

  SimulateOpts sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic scene with embeddings and its gt graph");
  s->add_option("--config", sim.config, "JSON simulation config");
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--seed", sim.seed, "Override the config seed");
  s->add_flag("--force", sim.force, "Write into an existing directory");
  s->callback([&] { action = [&] { return cmd_simulate(sim, out); }; });

  BuildGtOpts gt;
  auto* b = app.add_subcommand("build-gt", "Build the ground-truth graph of a scene file");
  b->add_option("--scene", gt.scene, "Scene JSON")->required();
  b->add_option("--out", gt.out, "Output graph JSON")->required();
  b->add_option("--trans-thresh", gt.trans, "Same-place translation threshold (m)")->capture_default_str();
  b->add_option("--rot-thresh", gt.rot, "Same-place rotation threshold (rad)")->capture_default_str();
  b->callback([&] { action = [&] { return cmd_build_gt(gt, out); }; });

  AssociateOpts as;
  auto* a = app.add_subcommand("associate", "Predict a graph from embeddings");
  a->add_option("--scene", as.scene, "Scene JSON whose detections the embeddings describe")->required();
  a->add_option("--emb", as.emb, "Embedding file (.msge)")->required();
  a->add_option("--config", as.config, "JSON with tau_place / tau_object / bank_update");
  as.tau_place_opt = a->add_option("--tau-place", as.tau_place, "Place cosine threshold")->capture_default_str();
  as.tau_object_opt = a->add_option("--tau-object", as.tau_object, "Object cosine threshold")->capture_default_str();
  as.bank_opt = a->add_option("--bank-update", as.bank_update, "running_mean or replace")->capture_default_str();
  a->add_option("--out-graph", as.out_graph, "Predicted graph JSON")->required();
  a->add_option("--out-dets", as.out_dets, "Predicted detections JSON")->required();
  a->callback([&] { action = [&] { return cmd_associate(as, out); }; });

  EvaluateOpts ev;
  auto* e = app.add_subcommand("evaluate", "Score a predicted graph against ground truth");
  e->add_option("--gt-graph", ev.gt_graph, "Ground-truth graph JSON");
  e->add_option("--pred-graph", ev.pred_graph, "Predicted graph JSON");
  e->add_option("--gt-scene", ev.gt_scene, "Ground-truth scene JSON");
  e->add_option("--pred-dets", ev.pred_dets, "Predicted detections JSON");
  e->add_option("--emb", ev.emb, "Embedding file, enables Recall@1");
  e->add_option("--dir", ev.dir, "Directory of scene subdirectories to aggregate");
  e->add_option("--report", ev.report, "Output report JSON")->required();
  e->callback([&] { action = [&] { return cmd_evaluate(ev, out, err); }; });

  ExportDotOpts dot;
  auto* d = app.add_subcommand("export-dot", "Export a graph as Graphviz DOT");
  d->add_option("--graph", dot.graph, "Graph JSON")->required();
  d->add_option("--out", dot.out, "Output DOT file")->required();
  d->add_option("--match", dot.match, "Report JSON whose matching colors objects");
  d->add_option("--side", dot.side, "Which side of the matching the graph is (gt or pred)")->capture_default_str();
  d->callback([&] { action = [&] { return cmd_export_dot(dot, out); }; });

  ProbeOpts pr;
  auto* p = app.add_subcommand("probe", "Train or evaluate a linear probe on simulated embeddings");
  p->require_subcommand(1);
  auto* pt = p->add_subcommand("train", "Train place and object projector heads");
  pt->add_option("--config", pr.config, "JSON simulation config");
  pt->add_option("--probe-config", pr.probe_config, "JSON probe config");
  pt->add_option("--out", pr.out, "Output directory")->required();
  pt->add_option("--train-scenes", pr.train_scenes, "Number of training scenes")->capture_default_str();
  pt->add_option("--seed", pr.seed, "Override the seed");
  pt->add_option("--epochs", pr.epochs, "Override epochs");
  pt->add_option("--lr", pr.learning_rate, "Override learning rate");
  pt->add_option("--out-dim", pr.out_dim, "Override projector output dim");
  pt->add_flag("--force", pr.force, "Write into an existing directory");
  pt->callback([&] { action = [&] { return cmd_probe_train(pr, out); }; });
  auto* pe = p->add_subcommand("eval", "Compare raw and projected embeddings end to end");
  pe->add_option("--config", pr.config, "JSON simulation config");
  pe->add_option("--projectors", pr.projectors, "Directory written by probe train")->required();
  pe->add_option("--eval-scenes", pr.eval_scenes, "Number of evaluation scenes")->capture_default_str();
  pe->add_option("--first-scene", pr.first_eval_scene, "Index of the first evaluation scene")->capture_default_str();
  pe->add_option("--seed", pr.seed, "Override the seed");
  pe->add_option("--report", pr.report, "Output JSON with raw and probed means");
  pe->callback([&] { action = [&] { return cmd_probe_eval(pr, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    return action ? action() : 2;
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace msg::cli
