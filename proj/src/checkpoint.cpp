#include "softrl/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace softrl::checkpoint {

namespace {
constexpr const char* kMagic = "SOFTRL-CKPT v1";
}

const std::vector<double>& Blob::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw IoError("checkpoint tensor missing: " + name);
}

void save_blob(const Blob& blob, const std::string& path) {
    nlohmann::ordered_json header = blob.header;
    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    for (const auto& [name, tensor] : blob.tensors)
        manifest.push_back({{"name", name}, {"count", tensor.size()}});
    header["tensors"] = manifest;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint for writing: " + path);
    f << kMagic << "\n" << header.dump() << "\nBIN\n";
    for (const auto& [name, tensor] : blob.tensors)
        f.write(reinterpret_cast<const char*>(tensor.data()),
                static_cast<std::streamsize>(tensor.size() * sizeof(double)));
    if (!f) throw IoError("checkpoint write failed: " + path);
}

Blob load_blob(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(f, line) || line != kMagic)
        throw IoError("not a checkpoint file (bad magic): " + path);
    if (!std::getline(f, line)) throw IoError("checkpoint header missing: " + path);
    Blob blob;
    blob.header = nlohmann::ordered_json::parse(line);
    if (!std::getline(f, line) || line != "BIN")
        throw IoError("checkpoint binary marker missing: " + path);
    for (const auto& entry : blob.header.at("tensors")) {
        std::string name = entry.at("name");
        std::size_t count = entry.at("count");
        std::vector<double> tensor(count);
        f.read(reinterpret_cast<char*>(tensor.data()),
               static_cast<std::streamsize>(count * sizeof(double)));
        if (!f) throw IoError("checkpoint truncated reading tensor " + name + ": " + path);
        blob.tensors.emplace_back(std::move(name), std::move(tensor));
    }
    return blob;
}

void save_model(const nn::MlpModel& model, const std::string& path) {
    Blob blob;
    blob.header["kind"] = "mlp";
    blob.header["layer_sizes"] = model.layer_sizes;
    blob.header["activation"] = nn::activation_name(model.activation);
    blob.header["input_mode"] = model.input_mode;
    blob.header["weight_layout"] = "in_major_row_major";
    blob.tensors.emplace_back("in_mean", model.in_mean);
    blob.tensors.emplace_back("in_std", model.in_std);
    for (std::size_t l = 0; l < model.n_affine(); ++l) {
        blob.tensors.emplace_back("w" + std::to_string(l), model.weights[l]);
        blob.tensors.emplace_back("b" + std::to_string(l), model.biases[l]);
    }
    save_blob(blob, path);
}

nn::MlpModel load_model(const std::string& path) {
    Blob blob = load_blob(path);
    if (blob.header.at("kind") != "mlp") throw IoError("checkpoint is not an mlp: " + path);
    nn::MlpModel model;
    model.layer_sizes = blob.header.at("layer_sizes").get<std::vector<std::size_t>>();
    model.activation = nn::activation_from_name(blob.header.at("activation"));
    model.input_mode = blob.header.at("input_mode");
    model.in_mean = blob.tensor("in_mean");
    model.in_std = blob.tensor("in_std");
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        model.weights.push_back(blob.tensor("w" + std::to_string(l)));
        model.biases.push_back(blob.tensor("b" + std::to_string(l)));
        std::size_t in = model.layer_sizes[l], out = model.layer_sizes[l + 1];
        if (model.weights.back().size() != in * out || model.biases.back().size() != out)
            throw IoError("checkpoint tensor shape mismatch: " + path);
    }
    return model;
}

void write_meta_sidecar(const std::string& checkpoint_path, const nlohmann::ordered_json& meta) {
    write_text_file(checkpoint_path + ".meta.json", meta.dump(2) + "\n");
}

}  // namespace softrl::checkpoint
