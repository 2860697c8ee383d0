#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "softrl/nn.hpp"

namespace softrl::checkpoint {

/// Versioned binary container: a magic line, one JSON header line (kind,
/// structure, tensor manifest), then raw little-endian doubles per tensor.
struct Blob {
    nlohmann::ordered_json header;
    std::vector<std::pair<std::string, std::vector<double>>> tensors;

    const std::vector<double>& tensor(const std::string& name) const;
};

void save_blob(const Blob& blob, const std::string& path);
Blob load_blob(const std::string& path);

void save_model(const nn::MlpModel& model, const std::string& path);
nn::MlpModel load_model(const std::string& path);

/// Human-readable sidecar next to a checkpoint.
void write_meta_sidecar(const std::string& checkpoint_path, const nlohmann::ordered_json& meta);

}  // namespace softrl::checkpoint
