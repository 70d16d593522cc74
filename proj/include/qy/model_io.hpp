// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "qy/calibrate.hpp"
#include "qy/graph.hpp"

namespace qy {

// QYM1 model container: a JSON document {format_version, nodes,
// weight_manifest} plus a sidecar blob of concatenated QYT1 records; manifest
// offsets are byte offsets into the blob.

struct WeightManifestEntry {
    std::string node_id;
    uint64_t kernel_offset = 0;
    uint64_t bias_offset = 0;
};

void save_model(const std::string& model_path, const std::string& blob_path,
                const GraphModel& model, const WeightBundle& weights);

GraphModel load_model(const std::string& model_path,
                      std::vector<WeightManifestEntry>* manifest = nullptr);

WeightBundle load_weights(const std::string& blob_path,
                          const std::vector<WeightManifestEntry>& manifest);

// JSON conversions for the wire/file schemas. Field names are stable.
nlohmann::json qparams_to_json(const QuantParams& qp);
QuantParams qparams_from_json(const nlohmann::json& j);

nlohmann::json assignment_to_json(const QuantAssignment& qa);
QuantAssignment assignment_from_json(const nlohmann::json& j);
void save_assignment(const std::string& path, const QuantAssignment& qa);
QuantAssignment load_assignment(const std::string& path);

nlohmann::json trace_to_json(const UhSearchTrace& trace);
UhSearchTrace trace_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const CalibrationReport& report);
CalibrationReport report_from_json(const nlohmann::json& j);
void save_report(const std::string& path, const CalibrationReport& report);
CalibrationReport load_report(const std::string& path);

/// Writes text through a temp file + atomic rename so failures leave no
/// partial output.
void atomic_write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace qy
