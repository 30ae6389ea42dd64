#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "msg/association.hpp"
#include "msg/embedlab.hpp"
#include "msg/graph.hpp"
#include "msg/metrics.hpp"
#include "msg/scene.hpp"
#include "msg/simulator.hpp"

namespace msg::io {

using nlohmann::json;

// All *_from_json functions throw ValidationError on malformed content.

json graph_to_json(const MSGraph& g);
MSGraph graph_from_json(const json& j);

json scene_to_json(const SceneAnnotation& s);
SceneAnnotation scene_from_json(const json& j);

/// Predicted detections: {"frames": [{"frame_id": t, "detections": [...]}]}
/// using the scene file's detection schema; object_id is the predicted id.
json detections_to_json(const std::vector<std::vector<Detection>>& per_frame);
std::vector<std::vector<Detection>> detections_from_json(const json& j);

json report_to_json(const EvalReport& r);
EvalReport report_from_json(const json& j);
json mean_to_json(const MeanReport& m);

json projector_to_json(const Projector& p);
Projector projector_from_json(const json& j);

/// Config files are partial: absent keys keep the defaults already in `cfg`.
void apply_sim_config(const json& j, SimConfig& cfg);
json sim_config_to_json(const SimConfig& cfg);
void apply_probe_config(const json& j, ProbeConfig& cfg);
json probe_config_to_json(const ProbeConfig& cfg);

/// Rounds to 6 significant digits, the precision of every reported number.
double round6(double x);

/// Binary embedding file, little-endian: "MSGE", u32 version (1), u32 dim,
/// u32 frame count, then per frame u32 frame_id, u32 detection count, the
/// place vector and each detection vector as dim x f32.
inline constexpr std::uint32_t kEmbeddingVersion = 1;
std::string encode_embeddings(const EmbeddingSet& emb);
EmbeddingSet decode_embeddings(std::span<const char> bytes);

std::string read_file(const std::filesystem::path& path);           // IoError
void write_file_atomic(const std::filesystem::path& path, const std::string& content);  // IoError
json read_json(const std::filesystem::path& path);                   // IoError / ValidationError
void write_json(const std::filesystem::path& path, const json& j);   // pretty-printed, trailing newline

}  // namespace msg::io
