#include "dcpa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace dcpa {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'P', 'A'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path.string()) {
        if (!in_) throw DataError("checkpoint: cannot open '" + path_ + "'");
    }

    void bytes(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw DataError("checkpoint: truncated file '" + path_ + "'");
        }
    }

    std::uint32_t u32() {
        std::uint8_t b[4];
        bytes(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        return lo | (static_cast<std::uint64_t>(u32()) << 32);
    }

    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string str(std::size_t n) {
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    void floats(float* dst, std::size_t n) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(dst, n * 4);
        } else {
            for (std::size_t i = 0; i < n; ++i) dst[i] = f32();
        }
    }

    bool at_end() {
        in_.peek();
        return in_.eof();
    }

private:
    std::ifstream in_;
    std::string path_;
};

}  // namespace

void save_checkpoint(const Unet& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write '" + path.string() + "'");
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));

    const ModelConfig& cfg = model.config();
    std::vector<std::uint8_t> rec;
    put_u32(rec, static_cast<std::uint32_t>(cfg.depth));
    put_u32(rec, static_cast<std::uint32_t>(cfg.base_width));
    put_u32(rec, static_cast<std::uint32_t>(cfg.in_channels));
    put_u32(rec, static_cast<std::uint32_t>(cfg.num_classes));
    put_u64(rec, cfg.seed);
    put_u32(rec, meta.epoch);
    put_f32(rec, meta.val_f1);

    std::vector<std::uint8_t> head;
    put_u32(head, static_cast<std::uint32_t>(rec.size()));
    out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));

    std::vector<std::uint8_t> count;
    put_u32(count, static_cast<std::uint32_t>(model.params().size()));
    out.write(reinterpret_cast<const char*>(count.data()), static_cast<std::streamsize>(count.size()));

    for (const auto& p : model.params()) {
        std::vector<std::uint8_t> entry;
        put_u32(entry, static_cast<std::uint32_t>(p.name.size()));
        entry.insert(entry.end(), p.name.begin(), p.name.end());
        put_u32(entry, static_cast<std::uint32_t>(p.tensor.rank()));
        for (int d = 0; d < p.tensor.rank(); ++d) put_u32(entry, static_cast<std::uint32_t>(p.tensor.dim(d)));
        out.write(reinterpret_cast<const char*>(entry.data()), static_cast<std::streamsize>(entry.size()));
        if constexpr (std::endian::native == std::endian::little) {
            out.write(reinterpret_cast<const char*>(p.tensor.data()),
                      static_cast<std::streamsize>(p.tensor.size() * 4));
        } else {
            std::vector<std::uint8_t> buf;
            buf.reserve(p.tensor.size() * 4);
            for (std::size_t i = 0; i < p.tensor.size(); ++i) put_f32(buf, p.tensor[i]);
            out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        }
    }
    out.flush();
    if (!out) throw DataError("checkpoint: write failed for '" + path.string() + "'");
}

Unet load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("checkpoint: bad magic in '" + path.string() + "' (not a checkpoint file)");
    }
    std::uint8_t version;
    r.bytes(&version, 1);
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported version " + std::to_string(version) + " in '" + path.string() +
                        "'");
    }
    const std::uint32_t rec_len = r.u32();
    if (rec_len != 4 * 6 + 8) {
        throw DataError("checkpoint: unexpected config record length in '" + path.string() + "'");
    }
    ModelConfig cfg;
    cfg.depth = static_cast<int>(r.u32());
    cfg.base_width = static_cast<int>(r.u32());
    cfg.in_channels = static_cast<int>(r.u32());
    cfg.num_classes = static_cast<int>(r.u32());
    cfg.seed = r.u64();
    CheckpointMeta m;
    m.epoch = r.u32();
    m.val_f1 = r.f32();
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw DataError("checkpoint: invalid config in '" + path.string() + "': " + e.what());
    }

    Unet model(cfg);
    const std::uint32_t n_params = r.u32();
    if (n_params != model.params().size()) {
        throw DataError("checkpoint: parameter count " + std::to_string(n_params) + " does not match config (" +
                        std::to_string(model.params().size()) + ") in '" + path.string() + "'");
    }
    for (auto& p : model.params()) {
        const std::uint32_t name_len = r.u32();
        if (name_len > 4096) throw DataError("checkpoint: corrupt entry name in '" + path.string() + "'");
        const std::string name = r.str(name_len);
        if (name != p.name) {
            throw DataError("checkpoint: parameter '" + name + "' does not match expected '" + p.name + "'");
        }
        const std::uint32_t rank = r.u32();
        if (rank != static_cast<std::uint32_t>(p.tensor.rank())) {
            throw DataError("checkpoint: rank mismatch for '" + name + "'");
        }
        for (int d = 0; d < p.tensor.rank(); ++d) {
            const std::uint32_t extent = r.u32();
            if (extent != static_cast<std::uint32_t>(p.tensor.dim(d))) {
                throw DataError("checkpoint: shape mismatch for '" + name + "'");
            }
        }
        r.floats(p.tensor.data(), p.tensor.size());
    }
    if (!r.at_end()) {
        throw DataError("checkpoint: trailing bytes in '" + path.string() + "'");
    }
    if (meta) *meta = m;
    return model;
}

}  // namespace dcpa
