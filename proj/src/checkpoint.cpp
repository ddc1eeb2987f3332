#include "dymoe/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace dymoe {

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'M', 'O', 'E', 'C', 'P', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw data_error(path + ": truncated checkpoint");
    return v;
}

}  // namespace

void save_model(const ModelState& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error(path + ": cannot open for writing");
    out.write(kMagic, sizeof kMagic);
    write_u64(out, model.feature_dim);
    write_u64(out, model.width);
    write_u64(out, model.num_layers);
    write_u64(out, model.layers.empty() ? 1 : model.layers[0].k);
    write_u64(out, model.blocks_seen);
    write_u64(out, model.num_classes());
    for (const auto& p : model.all_params()) {
        write_u64(out, p->rows);
        write_u64(out, p->cols);
        out.write(reinterpret_cast<const char*>(p->data.data()),
                  static_cast<std::streamsize>(p->data.size() * sizeof(double)));
    }
    if (!out) throw data_error(path + ": write failed");
}

ModelState load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(path + ": cannot open");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw data_error(path + ": not a model checkpoint");

    const auto feature_dim = read_u64(in, path);
    const auto width = read_u64(in, path);
    const auto num_layers = read_u64(in, path);
    const auto k = read_u64(in, path);
    const auto blocks_seen = read_u64(in, path);
    const auto num_classes = read_u64(in, path);

    auto model = ModelState::create(feature_dim, width, num_layers, k, num_classes, 0);
    for (std::uint64_t t = 0; t < blocks_seen; ++t) grow_model(model, {}, 0);

    for (const auto& p : model.all_params()) {
        const auto rows = read_u64(in, path);
        const auto cols = read_u64(in, path);
        if (rows != p->rows || cols != p->cols)
            throw data_error(path + ": tensor shape " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " does not match model layout " +
                             p->shape_str());
        in.read(reinterpret_cast<char*>(p->data.data()),
                static_cast<std::streamsize>(p->data.size() * sizeof(double)));
        if (!in) throw data_error(path + ": truncated checkpoint");
    }
    if (in.peek() != std::ifstream::traits_type::eof())
        throw data_error(path + ": trailing bytes after checkpoint payload");
    return model;
}

}  // namespace dymoe
