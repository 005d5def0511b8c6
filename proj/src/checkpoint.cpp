#include "fscil/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "fscil/errors.hpp"

namespace fscil {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'F', 'S', 'C', 'I', 'L', 'C', 'K', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw IoError("checkpoint truncated while reading length");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    // Column-major contiguous, matching Eigen's default storage.
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

Matrix read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw IoError("checkpoint truncated while reading tensor data");
    return m;
}

json tensor_entry(const std::string& kind, const std::string& name, const Matrix& m) {
    return json{{"kind", kind},
                {"name", name},
                {"rows", m.rows()},
                {"cols", m.cols()}};
}

}  // namespace

void save_model(const std::string& path, const ModelState& model,
                const CheckpointMeta& meta) {
    validate(model);

    json header;
    header["arch"] = arch_to_string(model.encoder.arch);
    header["embed_dim"] = model.encoder.embed_dim;
    header["input_shape"] = {model.encoder.input_shape.channels,
                             model.encoder.input_shape.height,
                             model.encoder.input_shape.width};
    header["metric"] = metric_to_string(model.metric);
    header["classifier_registry"] = model.classifier.class_registry;
    header["fingerprint"] = meta.fingerprint;

    json dir = json::array();
    for (const auto& [name, m] : model.encoder.params)
        dir.push_back(tensor_entry("param", name, m));
    for (const auto& [name, m] : model.encoder.buffers)
        dir.push_back(tensor_entry("buffer", name, m));
    dir.push_back(tensor_entry("classifier", "classifier", model.classifier.rows));
    header["tensors"] = dir;

    const std::string head = header.dump();  // sorted keys, no whitespace

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, head.size());
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, m] : model.encoder.params) write_matrix(out, m);
    for (const auto& [name, m] : model.encoder.buffers) write_matrix(out, m);
    write_matrix(out, model.classifier.rows);
    out.flush();
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not a model checkpoint: " + path);

    const std::uint64_t head_len = read_u64(in);
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!in) throw IoError("checkpoint truncated while reading header");

    json header = json::parse(head);

    LoadedModel loaded;
    ModelState& model = loaded.model;
    model.encoder.arch = arch_from_string(header.at("arch").get<std::string>());
    model.encoder.embed_dim = header.at("embed_dim").get<int>();
    const auto shape = header.at("input_shape");
    model.encoder.input_shape = ImageShape{shape.at(0).get<int>(),
                                           shape.at(1).get<int>(),
                                           shape.at(2).get<int>()};
    model.metric = metric_from_string(header.at("metric").get<std::string>());
    model.classifier.class_registry =
        header.at("classifier_registry").get<std::vector<int>>();
    loaded.meta.fingerprint = header.at("fingerprint").get<std::string>();

    for (const auto& entry : header.at("tensors")) {
        const std::string kind = entry.at("kind").get<std::string>();
        const std::string name = entry.at("name").get<std::string>();
        Matrix m = read_matrix(in, entry.at("rows").get<Eigen::Index>(),
                               entry.at("cols").get<Eigen::Index>());
        if (kind == "param")
            model.encoder.params[name] = std::move(m);
        else if (kind == "buffer")
            model.encoder.buffers[name] = std::move(m);
        else if (kind == "classifier")
            model.classifier.rows = std::move(m);
        else
            throw IoError("unknown tensor kind in checkpoint: " + kind);
    }

    validate(model);
    return loaded;
}

void save_model_atomic(const std::string& path, const ModelState& model,
                       const CheckpointMeta& meta) {
    const std::string tmp = path + ".tmp";
    save_model(tmp, model, meta);
    std::filesystem::rename(tmp, path);
}

}  // namespace fscil
