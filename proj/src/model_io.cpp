// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/model_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "qy/errors.hpp"
#include "qy/tensor_io.hpp"

namespace qy {

using nlohmann::json;

namespace {

json node_to_json(const NodeSpec& n) {
    json attrs = json::object();
    switch (n.op) {
        case OpKind::conv2d:
            attrs["stride"] = n.stride;
            attrs["padding"] = n.padding;
            attrs["out_channels"] = n.out_channels;
            attrs["kernel_h"] = n.kernel_h;
            attrs["kernel_w"] = n.kernel_w;
            break;
        case OpKind::concat:
            attrs["axis"] = n.axis;
            break;
        case OpKind::maxpool:
            attrs["k"] = n.pool_k;
            attrs["stride"] = n.pool_stride;
            break;
        case OpKind::upsample_nearest:
            attrs["factor"] = n.factor;
            break;
        case OpKind::leaky_relu:
            attrs["slope"] = n.slope;
            break;
        case OpKind::input:
            attrs["channels"] = n.in_channels;
            attrs["height"] = n.in_h;
            attrs["width"] = n.in_w;
            break;
        default:
            break;
    }
    return json{{"id", n.id},
                {"op_kind", op_kind_name(n.op)},
                {"inputs", n.inputs},
                {"attrs", attrs}};
}

NodeSpec node_from_json(const json& j) {
    NodeSpec n;
    n.id = j.at("id").get<std::string>();
    n.op = op_kind_from_name(j.at("op_kind").get<std::string>());
    n.inputs = j.at("inputs").get<std::vector<std::string>>();
    const json& attrs = j.at("attrs");
    switch (n.op) {
        case OpKind::conv2d:
            n.stride = attrs.at("stride").get<int>();
            n.padding = attrs.at("padding").get<int>();
            n.out_channels = attrs.at("out_channels").get<int>();
            n.kernel_h = attrs.at("kernel_h").get<int>();
            n.kernel_w = attrs.at("kernel_w").get<int>();
            break;
        case OpKind::concat:
            n.axis = attrs.at("axis").get<int>();
            break;
        case OpKind::maxpool:
            n.pool_k = attrs.at("k").get<int>();
            n.pool_stride = attrs.at("stride").get<int>();
            break;
        case OpKind::upsample_nearest:
            n.factor = attrs.at("factor").get<int>();
            break;
        case OpKind::leaky_relu:
            n.slope = attrs.at("slope").get<float>();
            break;
        case OpKind::input:
            n.in_channels = attrs.at("channels").get<int>();
            n.in_h = attrs.at("height").get<int>();
            n.in_w = attrs.at("width").get<int>();
            break;
        default:
            break;
    }
    return n;
}

// Doubles that may legitimately be +inf (UH trace entries) serialize as the
// JSON null nlohmann emits for non-finite values; parse maps null back.
double json_to_double(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open for write: " + tmp);
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os.flush()) throw IoError("flush failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path + ": " + ec.message());
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void save_model(const std::string& model_path, const std::string& blob_path,
                const GraphModel& model, const WeightBundle& weights) {
    model.validate();

    // Blob first: record each tensor's byte offset as it is appended.
    std::ostringstream blob;
    std::vector<WeightManifestEntry> manifest;
    for (const NodeSpec& n : model.nodes) {
        if (n.op != OpKind::conv2d) continue;
        auto it = weights.entries.find(n.id);
        if (it == weights.entries.end()) {
            throw MissingWeight("no weights for conv node '" + n.id + "'");
        }
        WeightManifestEntry e;
        e.node_id = n.id;
        e.kernel_offset = static_cast<uint64_t>(blob.tellp());
        write_qyt(blob, it->second.kernel);
        e.bias_offset = static_cast<uint64_t>(blob.tellp());
        write_qyt(blob, it->second.bias);
        manifest.push_back(e);
    }

    json jmanifest = json::array();
    for (const WeightManifestEntry& e : manifest) {
        jmanifest.push_back(json{{"node_id", e.node_id},
                                 {"kernel_offset", e.kernel_offset},
                                 {"bias_offset", e.bias_offset}});
    }
    json jnodes = json::array();
    for (const NodeSpec& n : model.nodes) jnodes.push_back(node_to_json(n));

    const json doc = {{"format_version", 1},
                      {"nodes", jnodes},
                      {"weight_manifest", jmanifest}};

    atomic_write_text(blob_path, blob.str());
    atomic_write_text(model_path, doc.dump(2) + "\n");
}

GraphModel load_model(const std::string& model_path,
                      std::vector<WeightManifestEntry>* manifest) {
    json doc;
    try {
        doc = json::parse(read_text(model_path));
    } catch (const json::exception& e) {
        throw IoError("cannot parse model JSON: " + std::string(e.what()));
    }
    try {
        if (doc.at("format_version").get<int>() != 1) {
            throw IoError("unsupported QYM1 format_version");
        }
        GraphModel model;
        for (const json& jn : doc.at("nodes")) {
            model.nodes.push_back(node_from_json(jn));
        }
        if (manifest != nullptr) {
            manifest->clear();
            for (const json& je : doc.at("weight_manifest")) {
                WeightManifestEntry e;
                e.node_id = je.at("node_id").get<std::string>();
                e.kernel_offset = je.at("kernel_offset").get<uint64_t>();
                e.bias_offset = je.at("bias_offset").get<uint64_t>();
                manifest->push_back(e);
            }
        }
        model.validate();
        return model;
    } catch (const json::exception& e) {
        throw IoError("malformed QYM1 document: " + std::string(e.what()));
    }
}

WeightBundle load_weights(const std::string& blob_path,
                          const std::vector<WeightManifestEntry>& manifest) {
    std::ifstream is(blob_path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + blob_path);
    WeightBundle bundle;
    for (const WeightManifestEntry& e : manifest) {
        ConvWeights w;
        is.clear();
        is.seekg(static_cast<std::streamoff>(e.kernel_offset));
        if (!is) throw IoError("bad kernel offset for '" + e.node_id + "'");
        w.kernel = read_qyt(is);
        is.clear();
        is.seekg(static_cast<std::streamoff>(e.bias_offset));
        if (!is) throw IoError("bad bias offset for '" + e.node_id + "'");
        w.bias = read_qyt(is);
        bundle.entries[e.node_id] = std::move(w);
    }
    return bundle;
}

json qparams_to_json(const QuantParams& qp) {
    json j = {{"bits", qp.bits},
              {"signed", qp.is_signed},
              {"symmetric", qp.symmetric},
              {"granularity", qp.granularity == Granularity::per_tensor
                                  ? "per_tensor"
                                  : "per_channel"}};
    if (qp.identity()) return j;
    if (qp.granularity == Granularity::per_tensor) {
        j["scale"] = qp.scales[0];
        j["zero_point"] = qp.zero_points[0];
    } else {
        j["axis"] = qp.axis;
        j["scales"] = qp.scales;
        j["zero_points"] = qp.zero_points;
    }
    return j;
}

QuantParams qparams_from_json(const json& j) {
    QuantParams qp;
    qp.bits = j.at("bits").get<int>();
    qp.is_signed = j.at("signed").get<bool>();
    qp.symmetric = j.at("symmetric").get<bool>();
    qp.granularity = j.at("granularity").get<std::string>() == "per_channel"
                         ? Granularity::per_channel
                         : Granularity::per_tensor;
    if (qp.identity()) return qp;
    if (qp.granularity == Granularity::per_tensor) {
        qp.scales = {j.at("scale").get<double>()};
        qp.zero_points = {j.at("zero_point").get<int32_t>()};
    } else {
        qp.axis = j.at("axis").get<int>();
        qp.scales = j.at("scales").get<std::vector<double>>();
        qp.zero_points = j.at("zero_points").get<std::vector<int32_t>>();
    }
    qp.validate();
    return qp;
}

json assignment_to_json(const QuantAssignment& qa) {
    json jnodes = json::array();
    for (const auto& [id, nq] : qa.nodes) {
        json entry = {{"node_id", id}};
        if (nq.weight_qp.has_value()) {
            entry["weight"] = qparams_to_json(*nq.weight_qp);
        }
        if (nq.act_qp.has_value()) {
            entry["activation"] = qparams_to_json(*nq.act_qp);
        }
        jnodes.push_back(entry);
    }
    return json{{"format_version", 1},
                {"skip", std::vector<std::string>(qa.skip.begin(),
                                                  qa.skip.end())},
                {"nodes", jnodes}};
}

QuantAssignment assignment_from_json(const json& j) {
    QuantAssignment qa;
    for (const std::string& s :
         j.at("skip").get<std::vector<std::string>>()) {
        qa.skip.insert(s);
    }
    for (const json& je : j.at("nodes")) {
        NodeQuant nq;
        if (je.contains("weight")) {
            nq.weight_qp = qparams_from_json(je.at("weight"));
        }
        if (je.contains("activation")) {
            nq.act_qp = qparams_from_json(je.at("activation"));
        }
        qa.nodes[je.at("node_id").get<std::string>()] = nq;
    }
    return qa;
}

void save_assignment(const std::string& path, const QuantAssignment& qa) {
    atomic_write_text(path, assignment_to_json(qa).dump(2) + "\n");
}

QuantAssignment load_assignment(const std::string& path) {
    try {
        return assignment_from_json(json::parse(read_text(path)));
    } catch (const json::exception& e) {
        throw IoError("malformed assignment JSON: " + std::string(e.what()));
    }
}

json trace_to_json(const UhSearchTrace& trace) {
    return json{{"start_index", trace.start_index},
                {"mse_by_index", trace.mse_by_index},
                {"best_index", trace.best_index},
                {"best_upper", trace.best_upper}};
}

UhSearchTrace trace_from_json(const json& j) {
    UhSearchTrace t;
    t.start_index = j.at("start_index").get<int>();
    t.best_index = j.at("best_index").get<int>();
    t.best_upper = j.at("best_upper").get<double>();
    for (const json& v : j.at("mse_by_index")) {
        t.mse_by_index.push_back(json_to_double(v));
    }
    return t;
}

json report_to_json(const CalibrationReport& report) {
    json jnodes = json::array();
    for (const NodeReport& n : report.nodes) {
        json entry = {{"node_id", n.node_id},
                      {"range_lower", n.range_lower},
                      {"range_upper", n.range_upper},
                      {"scale", n.scale},
                      {"zero_point", n.zero_point},
                      {"bits", n.bits},
                      {"weight_mse", n.weight_mse},
                      {"act_mse", n.act_mse},
                      {"sqnr_db", n.sqnr_db}};
        if (n.uh_trace.has_value()) {
            entry["uh_trace"] = trace_to_json(*n.uh_trace);
        }
        jnodes.push_back(entry);
    }
    json j = {{"format_version", 1},
              {"seed", report.seed},
              {"global", {{"output_mse", report.output_mse},
                          {"output_cosine", report.output_cosine}}},
              {"nodes", jnodes}};
    if (report.wall_time_ms.has_value()) {
        j["global"]["wall_time_ms"] = *report.wall_time_ms;
    }
    return j;
}

CalibrationReport report_from_json(const json& j) {
    CalibrationReport r;
    r.seed = j.at("seed").get<uint64_t>();
    r.output_mse = j.at("global").at("output_mse").get<double>();
    r.output_cosine = j.at("global").at("output_cosine").get<double>();
    if (j.at("global").contains("wall_time_ms")) {
        r.wall_time_ms = j.at("global").at("wall_time_ms").get<double>();
    }
    for (const json& je : j.at("nodes")) {
        NodeReport n;
        n.node_id = je.at("node_id").get<std::string>();
        n.range_lower = je.at("range_lower").get<double>();
        n.range_upper = je.at("range_upper").get<double>();
        n.scale = je.at("scale").get<double>();
        n.zero_point = je.at("zero_point").get<int>();
        n.bits = je.at("bits").get<int>();
        n.weight_mse = je.at("weight_mse").get<double>();
        n.act_mse = je.at("act_mse").get<double>();
        n.sqnr_db = je.at("sqnr_db").get<double>();
        if (je.contains("uh_trace")) {
            n.uh_trace = trace_from_json(je.at("uh_trace"));
        }
        r.nodes.push_back(std::move(n));
    }
    return r;
}

void save_report(const std::string& path, const CalibrationReport& report) {
    atomic_write_text(path, report_to_json(report).dump(2) + "\n");
}

CalibrationReport load_report(const std::string& path) {
    try {
        return report_from_json(json::parse(read_text(path)));
    } catch (const json::exception& e) {
        throw IoError("malformed report JSON: " + std::string(e.what()));
    }
}

}  // namespace qy
