#include "msg/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "msg/errors.hpp"

namespace msg::io {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw ValidationError(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
  }
}

template <typename T>
void maybe(const json& j, const char* key, std::optional<T>& out) {
  T value{};
  if (j.contains(key) && !j.at(key).is_null()) {
    maybe(j, key, value);
    out = value;
  }
}

template <std::size_t N>
std::array<double, N> fixed_array(const json& j, const char* key) {
  const auto v = get<std::vector<double>>(j, key);
  if (v.size() != N) throw ValidationError(std::string("field '") + key + "' must have " + std::to_string(N) + " entries");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

json quat_json(const Eigen::Quaterniond& q) { return {q.w(), q.x(), q.y(), q.z()}; }
json vec3_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
json box_json(const Box2& b) { return {b.x1, b.y1, b.x2, b.y2}; }

Eigen::Quaterniond quat_from(const json& j, const char* key) {
  const auto a = fixed_array<4>(j, key);
  return Eigen::Quaterniond(a[0], a[1], a[2], a[3]);
}

Eigen::Vector3d vec3_from(const json& j, const char* key) {
  const auto a = fixed_array<3>(j, key);
  return Eigen::Vector3d(a[0], a[1], a[2]);
}

json detection_json(const Detection& d) {
  json j;
  j["object_id"] = d.object_id ? json(*d.object_id) : json(nullptr);
  j["box"] = box_json(d.box);
  j["score"] = d.score ? json(*d.score) : json(nullptr);
  return j;
}

Detection detection_from(const json& j) {
  Detection d;
  std::optional<ObjectId> id;
  maybe(j, "object_id", id);
  d.object_id = id;
  const auto b = fixed_array<4>(j, "box");
  d.box = Box2{b[0], b[1], b[2], b[3]};
  if (!d.box.valid()) throw ValidationError("detection box must satisfy x1 < x2 and y1 < y2");
  std::optional<double> score;
  maybe(j, "score", score);
  d.score = score;
  return d;
}

json counts_json(const IouCounts& c) { return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}}; }

IouCounts counts_from(const json& j) {
  return {get<std::size_t>(j, "tp"), get<std::size_t>(j, "fp"), get<std::size_t>(j, "fn")};
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

void put_f32(std::string& out, double v) {
  const auto f = static_cast<float>(v);
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    if (bytes_.size() - pos_ < 4) throw ValidationError("unexpected end of embeddings");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
  }

  double f32() {
    const std::uint32_t bits = u32();
    float f = 0;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

double round6(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::strtod(buf, nullptr);
}

json graph_to_json(const MSGraph& g) {
  json objects = json::array();
  for (const auto& o : g.objects()) {
    objects.push_back({{"id", o.id}, {"label", o.label ? json(*o.label) : json(nullptr)}});
  }
  json pp = json::array(), po = json::array();
  for (const auto& [i, j] : g.pp_edges()) pp.push_back({i, j});
  for (const auto& [p, o] : g.po_edges()) po.push_back({p, o});
  return {{"num_places", g.num_places()}, {"objects", objects}, {"pp_edges", pp}, {"po_edges", po}};
}

MSGraph graph_from_json(const json& j) {
  return guarded("graph file", [&] {
    GraphData d;
    d.num_places = get<std::size_t>(j, "num_places");
    for (const auto& o : field(j, "objects")) {
      ObjectNode n;
      n.id = get<ObjectId>(o, "id");
      std::optional<std::string> label;
      maybe(o, "label", label);
      n.label = label;
      d.objects.push_back(std::move(n));
    }
    for (const auto& e : field(j, "pp_edges")) {
      const auto v = e.get<std::vector<PlaceId>>();
      if (v.size() != 2) throw ValidationError("pp edge must have two endpoints");
      d.pp_edges.emplace_back(v[0], v[1]);
    }
    for (const auto& e : field(j, "po_edges")) {
      const auto v = e.get<std::vector<std::uint32_t>>();
      if (v.size() != 2) throw ValidationError("po edge must have two endpoints");
      d.po_edges.emplace_back(v[0], v[1]);
    }
    return MSGraph::create(std::move(d));
  });
}

json scene_to_json(const SceneAnnotation& s) {
  json frames = json::array();
  for (const auto& f : s.frames) {
    json dets = json::array();
    for (const auto& d : f.detections) dets.push_back(detection_json(d));
    frames.push_back({{"frame_id", f.frame_id},
                      {"pose", {{"q", quat_json(f.pose.rotation)}, {"t", vec3_json(f.pose.translation)}}},
                      {"intrinsics",
                       {{"fx", f.intrinsics.fx},
                        {"fy", f.intrinsics.fy},
                        {"cx", f.intrinsics.cx},
                        {"cy", f.intrinsics.cy},
                        {"width", f.intrinsics.width},
                        {"height", f.intrinsics.height}}},
                      {"detections", dets}});
  }
  json objects = nullptr;
  if (s.objects3d) {
    objects = json::array();
    for (const auto& o : *s.objects3d) {
      objects.push_back({{"object_id", o.object_id},
                         {"center", vec3_json(o.box.center)},
                         {"half_extents", vec3_json(o.box.half_extents)},
                         {"q", quat_json(o.box.orientation)},
                         {"label", o.label}});
    }
  }
  return {{"scene_id", s.scene_id}, {"frames", frames}, {"objects3d", objects}};
}

SceneAnnotation scene_from_json(const json& j) {
  return guarded("scene file", [&] {
    SceneAnnotation s;
    s.scene_id = get<std::string>(j, "scene_id");
    for (const auto& fj : field(j, "frames")) {
      Frame f;
      f.frame_id = get<PlaceId>(fj, "frame_id");
      const auto& pose = field(fj, "pose");
      f.pose = Pose::make(quat_from(pose, "q"), vec3_from(pose, "t"));
      if (fj.contains("intrinsics") && !fj.at("intrinsics").is_null()) {
        const auto& ij = fj.at("intrinsics");
        f.intrinsics = Intrinsics{get<double>(ij, "fx"),    get<double>(ij, "fy"),    get<double>(ij, "cx"),
                                  get<double>(ij, "cy"),    get<double>(ij, "width"), get<double>(ij, "height")};
      }
      for (const auto& dj : field(fj, "detections")) f.detections.push_back(detection_from(dj));
      s.frames.push_back(std::move(f));
    }
    if (j.contains("objects3d") && !j.at("objects3d").is_null()) {
      std::vector<Object3d> objects;
      for (const auto& oj : j.at("objects3d")) {
        Object3d o;
        o.object_id = get<ObjectId>(oj, "object_id");
        o.box.center = vec3_from(oj, "center");
        o.box.half_extents = vec3_from(oj, "half_extents");
        o.box.orientation = quat_from(oj, "q");
        maybe(oj, "label", o.label);
        objects.push_back(std::move(o));
      }
      s.objects3d = std::move(objects);
    }
    s.check();
    return s;
  });
}

json detections_to_json(const std::vector<std::vector<Detection>>& per_frame) {
  json frames = json::array();
  for (std::size_t t = 0; t < per_frame.size(); ++t) {
    json dets = json::array();
    for (const auto& d : per_frame[t]) dets.push_back(detection_json(d));
    frames.push_back({{"frame_id", t}, {"detections", dets}});
  }
  return {{"frames", frames}};
}

std::vector<std::vector<Detection>> detections_from_json(const json& j) {
  return guarded("detections file", [&] {
    std::vector<std::vector<Detection>> out;
    for (const auto& fj : field(j, "frames")) {
      if (get<std::size_t>(fj, "frame_id") != out.size()) {
        throw ValidationError("detection frame ids must be consecutive from 0");
      }
      std::vector<Detection> dets;
      for (const auto& dj : field(fj, "detections")) {
        auto d = detection_from(dj);
        if (!d.object_id) throw ValidationError("predicted detection without object_id in frame " + std::to_string(out.size()));
        dets.push_back(d);
      }
      out.push_back(std::move(dets));
    }
    return out;
  });
}

json report_to_json(const EvalReport& r) {
  json pairs = json::array();
  for (const auto& p : r.matching.pairs) pairs.push_back({p.gt, p.pred, round6(p.score)});
  return {{"recall_at_1", r.recall_at_1 ? json(round6(*r.recall_at_1)) : json(nullptr)},
          {"pp_iou", round6(r.pp_iou)},
          {"po_iou", round6(r.po_iou)},
          {"pp", counts_json(r.pp)},
          {"po", counts_json(r.po)},
          {"matching",
           {{"pairs", pairs}, {"unmatched_gt", r.matching.unmatched_gt}, {"unmatched_pred", r.matching.unmatched_pred}}}};
}

EvalReport report_from_json(const json& j) {
  return guarded("report file", [&] {
    EvalReport r;
    std::optional<double> recall;
    maybe(j, "recall_at_1", recall);
    r.recall_at_1 = recall;
    r.pp_iou = get<double>(j, "pp_iou");
    r.po_iou = get<double>(j, "po_iou");
    r.pp = counts_from(field(j, "pp"));
    r.po = counts_from(field(j, "po"));
    const auto& m = field(j, "matching");
    for (const auto& p : field(m, "pairs")) {
      if (!p.is_array() || p.size() != 3) throw ValidationError("matching pair must be [gt, pred, m]");
      r.matching.pairs.push_back({p[0].get<ObjectId>(), p[1].get<ObjectId>(), p[2].get<double>()});
    }
    r.matching.unmatched_gt = get<std::vector<ObjectId>>(m, "unmatched_gt");
    r.matching.unmatched_pred = get<std::vector<ObjectId>>(m, "unmatched_pred");
    return r;
  });
}

json mean_to_json(const MeanReport& m) {
  return {{"recall_at_1", m.recall_at_1 ? json(round6(*m.recall_at_1)) : json(nullptr)},
          {"pp_iou", round6(m.pp_iou)},
          {"po_iou", round6(m.po_iou)},
          {"num_scenes", m.num_scenes}};
}

json projector_to_json(const Projector& p) {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(p.weights.size()));
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.weights.cols(); ++c) w.push_back(p.weights(r, c));
  }
  return {{"in_dim", p.weights.cols()},
          {"out_dim", p.weights.rows()},
          {"weights", w},
          {"bias", std::vector<double>(p.bias.data(), p.bias.data() + p.bias.size())}};
}

Projector projector_from_json(const json& j) {
  return guarded("projector file", [&] {
    const auto in = get<std::size_t>(j, "in_dim");
    const auto out = get<std::size_t>(j, "out_dim");
    const auto w = get<std::vector<double>>(j, "weights");
    const auto b = get<std::vector<double>>(j, "bias");
    if (in == 0 || out == 0) throw ValidationError("projector dims must be positive");
    if (w.size() != in * out) throw ValidationError("projector weights must hold in_dim * out_dim entries");
    if (b.size() != out) throw ValidationError("projector bias must hold out_dim entries");
    Projector p;
    p.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (std::size_t r = 0; r < out; ++r) {
      for (std::size_t c = 0; c < in; ++c) p.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r * in + c];
    }
    p.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    if (!p.weights.allFinite() || !p.bias.allFinite()) throw ValidationError("projector has non-finite entries");
    return p;
  });
}

void apply_sim_config(const json& j, SimConfig& cfg) {
  guarded("simulation config", [&] {
    if (!j.is_object()) throw ValidationError("simulation config must be a JSON object");
    maybe(j, "seed", cfg.seed);
    maybe(j, "room_half_size", cfg.room_half_size);
    maybe(j, "n_frames", cfg.n_frames);
    maybe(j, "n_objects", cfg.n_objects);
    maybe(j, "step", cfg.step);
    maybe(j, "heading_jitter", cfg.heading_jitter);
    maybe(j, "camera_height", cfg.camera_height);
    maybe(j, "camera_pitch", cfg.camera_pitch);
    maybe(j, "dim", cfg.dim);
    if (j.contains("place_mode")) {
      const auto mode = get<std::string>(j, "place_mode");
      if (mode == "oracle") cfg.place_mode = PlaceMode::oracle;
      else if (mode == "smooth") cfg.place_mode = PlaceMode::smooth;
      else throw ValidationError("invalid config field 'place_mode': expected oracle or smooth");
    }
    maybe(j, "sigma_place", cfg.sigma_place);
    maybe(j, "sigma_object", cfg.sigma_object);
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      maybe(d, "drop_prob", cfg.detector.drop_prob);
      maybe(d, "jitter_px", cfg.detector.jitter_px);
      maybe(d, "spurious_rate", cfg.detector.spurious_rate);
    }
    if (j.contains("thresholds")) {
      maybe(j.at("thresholds"), "translation", cfg.thresholds.translation);
      maybe(j.at("thresholds"), "rotation", cfg.thresholds.rotation);
    }
    maybe(j, "smooth_target_cosine", cfg.smooth_target_cosine);
    maybe(j, "object_distortion", cfg.object_distortion);
    maybe(j, "encoder_seed", cfg.encoder_seed);
    if (j.contains("projection")) {
      maybe(j.at("projection"), "min_area", cfg.projection.min_area);
      maybe(j.at("projection"), "near", cfg.projection.near);
      maybe(j.at("projection"), "min_visible_corners", cfg.projection.min_visible_corners);
    }
    if (j.contains("intrinsics")) {
      const auto& i = j.at("intrinsics");
      maybe(i, "fx", cfg.intrinsics.fx);
      maybe(i, "fy", cfg.intrinsics.fy);
      maybe(i, "cx", cfg.intrinsics.cx);
      maybe(i, "cy", cfg.intrinsics.cy);
      maybe(i, "width", cfg.intrinsics.width);
      maybe(i, "height", cfg.intrinsics.height);
    }
    return 0;
  });
}

json sim_config_to_json(const SimConfig& c) {
  return {{"seed", c.seed},
          {"room_half_size", c.room_half_size},
          {"n_frames", c.n_frames},
          {"n_objects", c.n_objects},
          {"step", c.step},
          {"heading_jitter", c.heading_jitter},
          {"camera_height", c.camera_height},
          {"camera_pitch", c.camera_pitch},
          {"dim", c.dim},
          {"place_mode", c.place_mode == PlaceMode::oracle ? "oracle" : "smooth"},
          {"sigma_place", c.sigma_place},
          {"sigma_object", c.sigma_object},
          {"detector",
           {{"drop_prob", c.detector.drop_prob},
            {"jitter_px", c.detector.jitter_px},
            {"spurious_rate", c.detector.spurious_rate}}},
          {"thresholds", {{"translation", c.thresholds.translation}, {"rotation", c.thresholds.rotation}}},
          {"smooth_target_cosine", c.smooth_target_cosine},
          {"object_distortion", c.object_distortion},
          {"encoder_seed", c.encoder_seed},
          {"projection",
           {{"min_area", c.projection.min_area},
            {"near", c.projection.near},
            {"min_visible_corners", c.projection.min_visible_corners}}},
          {"intrinsics",
           {{"fx", c.intrinsics.fx},
            {"fy", c.intrinsics.fy},
            {"cx", c.intrinsics.cx},
            {"cy", c.intrinsics.cy},
            {"width", c.intrinsics.width},
            {"height", c.intrinsics.height}}}};
}

void apply_probe_config(const json& j, ProbeConfig& cfg) {
  guarded("probe config", [&] {
    if (!j.is_object()) throw ValidationError("probe config must be a JSON object");
    maybe(j, "in_dim", cfg.in_dim);
    maybe(j, "out_dim", cfg.out_dim);
    maybe(j, "learning_rate", cfg.learning_rate);
    maybe(j, "weight_decay", cfg.weight_decay);
    maybe(j, "epochs", cfg.epochs);
    maybe(j, "scenes_per_batch", cfg.scenes_per_batch);
    maybe(j, "frames_per_scene", cfg.frames_per_scene);
    maybe(j, "positive_weight", cfg.positive_weight);
    maybe(j, "place_loss_weight", cfg.place_loss_weight);
    maybe(j, "object_loss_weight", cfg.object_loss_weight);
    maybe(j, "bce_scale", cfg.bce_scale);
    maybe(j, "max_pairs_per_step", cfg.max_pairs_per_step);
    maybe(j, "cross_scene_negatives", cfg.cross_scene_negatives);
    maybe(j, "init_noise", cfg.init_noise);
    maybe(j, "coding_rate_eps", cfg.coding_rate_eps);
    maybe(j, "seed", cfg.seed);
    return 0;
  });
}

json probe_config_to_json(const ProbeConfig& c) {
  return {{"in_dim", c.in_dim},
          {"out_dim", c.out_dim},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"scenes_per_batch", c.scenes_per_batch},
          {"frames_per_scene", c.frames_per_scene},
          {"positive_weight", c.positive_weight},
          {"place_loss_weight", c.place_loss_weight},
          {"object_loss_weight", c.object_loss_weight},
          {"bce_scale", c.bce_scale},
          {"max_pairs_per_step", c.max_pairs_per_step},
          {"cross_scene_negatives", c.cross_scene_negatives},
          {"init_noise", c.init_noise},
          {"coding_rate_eps", c.coding_rate_eps},
          {"seed", c.seed}};
}

std::string encode_embeddings(const EmbeddingSet& emb) {
  std::string out = "MSGE";
  put_u32(out, kEmbeddingVersion);
  put_u32(out, static_cast<std::uint32_t>(emb.dim));
  put_u32(out, static_cast<std::uint32_t>(emb.frames.size()));
  for (const auto& f : emb.frames) {
    put_u32(out, f.frame_id);
    put_u32(out, static_cast<std::uint32_t>(f.objects.size()));
    for (Eigen::Index i = 0; i < f.place.size(); ++i) put_f32(out, f.place[i]);
    for (const auto& o : f.objects) {
      for (Eigen::Index i = 0; i < o.size(); ++i) put_f32(out, o[i]);
    }
  }
  return out;
}

EmbeddingSet decode_embeddings(std::span<const char> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "MSGE", 4) != 0) throw ValidationError("bad embedding file magic");
  Reader r(bytes.subspan(4));
  if (const auto version = r.u32(); version != kEmbeddingVersion) {
    throw ValidationError("unsupported embedding file version " + std::to_string(version));
  }
  EmbeddingSet emb;
  emb.dim = r.u32();
  const std::uint32_t n_frames = r.u32();
  if (emb.dim == 0) throw ValidationError("embedding file declares dim 0");
  for (std::uint32_t t = 0; t < n_frames; ++t) {
    FrameEmbedding f;
    f.frame_id = r.u32();
    const std::uint32_t n_det = r.u32();
    if (f.frame_id != t) {
      throw ValidationError("embedding layout inconsistent with header dim (frame " + std::to_string(t) + " reads id " +
                            std::to_string(f.frame_id) + ")");
    }
    if ((static_cast<std::uint64_t>(n_det) + 1) * emb.dim * 4 > r.remaining()) {
      throw ValidationError("unexpected end of embeddings");
    }
    f.place.resize(static_cast<Eigen::Index>(emb.dim));
    for (std::size_t i = 0; i < emb.dim; ++i) f.place[static_cast<Eigen::Index>(i)] = r.f32();
    for (std::uint32_t k = 0; k < n_det; ++k) {
      Eigen::VectorXd o(static_cast<Eigen::Index>(emb.dim));
      for (std::size_t i = 0; i < emb.dim; ++i) o[static_cast<Eigen::Index>(i)] = r.f32();
      f.objects.push_back(std::move(o));
    }
    emb.frames.push_back(std::move(f));
  }
  if (r.remaining() != 0) {
    throw ValidationError("embedding layout inconsistent with header dim (" + std::to_string(r.remaining()) +
                          " trailing bytes)");
  }
  emb.check();
  return emb;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("error writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

}  // namespace msg::io
