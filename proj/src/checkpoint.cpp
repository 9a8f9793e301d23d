#include "ndl/checkpoint.hpp"

#include <cstring>

#include "ndl/dataio.hpp"

namespace ndl {

namespace {

constexpr char kMagic[8] = {'N', 'D', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

struct Writer {
    std::vector<uint8_t> bytes;

    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void u32(uint32_t v) {
        uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
        raw(b, 4);
    }
    void u64(uint64_t v) {
        u32(uint32_t(v));
        u32(uint32_t(v >> 32));
    }
    void i32(int32_t v) { u32(uint32_t(v)); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void doubles(const Vec& v) {
        for (double d : v) f64(d);
    }
};

struct Reader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes.size()) {
            throw ParseError("checkpoint truncated: need " + std::to_string(n) + " bytes, have " +
                                 std::to_string(bytes.size() - pos),
                             pos);
        }
    }
    void raw(void* p, size_t n) {
        need(n);
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = uint32_t(bytes[pos]) | (uint32_t(bytes[pos + 1]) << 8) |
                     (uint32_t(bytes[pos + 2]) << 16) | (uint32_t(bytes[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        const uint64_t lo = u32();
        return lo | (uint64_t(u32()) << 32);
    }
    int32_t i32() { return int32_t(u32()); }
    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void doubles(Vec& v) {
        for (double& d : v) d = f64();
    }
};

void write_layer(Writer& w, const DenseLayer& layer) {
    w.u32(uint32_t(layer.out_dim()));
    w.u32(uint32_t(layer.in_dim()));
    w.doubles(layer.weights.data);
    w.doubles(layer.bias);
}

DenseLayer read_layer(Reader& r) {
    const size_t out = r.u32();
    const size_t in = r.u32();
    DenseLayer layer(out, in);
    r.doubles(layer.weights.data);
    r.doubles(layer.bias);
    return layer;
}

}  // namespace

std::vector<uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kVersion);

    const size_t n = ckpt.model.depth();
    w.u32(uint32_t(n));
    for (size_t l = 1; l <= n; ++l) write_layer(w, ckpt.model.encoder(l));
    for (size_t l = 1; l <= n; ++l) write_layer(w, ckpt.model.decoder(l));

    w.u32(uint32_t(ckpt.store.size()));
    w.u32(uint32_t(ckpt.store.model_code_width()));
    for (const auto& [label, stats] : ckpt.store.all()) {
        w.i32(label);
        w.u32(uint32_t(stats.code_width));
        w.u64(stats.sample_count);
        w.doubles(stats.mean);
        w.doubles(stats.chol.data);
    }
    return std::move(w.bytes);
}

Checkpoint parse_checkpoint(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw ParseError("bad checkpoint magic", 0);
    }
    const uint32_t version = r.u32();
    if (version != kVersion) {
        throw ParseError("unsupported checkpoint version " + std::to_string(version), 8);
    }

    const size_t n = r.u32();
    std::vector<DenseLayer> encoders, decoders;
    encoders.reserve(n);
    decoders.reserve(n);
    for (size_t l = 0; l < n; ++l) encoders.push_back(read_layer(r));
    for (size_t l = 0; l < n; ++l) decoders.push_back(read_layer(r));

    Checkpoint ckpt;
    ckpt.model = StackedAutoencoder::from_layers(std::move(encoders), std::move(decoders));

    const size_t classes = r.u32();
    const size_t store_width = r.u32();
    ckpt.store = ReplayStore(store_width);
    for (size_t c = 0; c < classes; ++c) {
        ClassStats stats;
        stats.label = r.i32();
        stats.code_width = r.u32();
        stats.sample_count = r.u64();
        stats.mean.resize(stats.code_width);
        r.doubles(stats.mean);
        stats.chol = Matrix(stats.code_width, stats.code_width);
        r.doubles(stats.chol.data);
        ckpt.store.insert(std::move(stats));
    }
    if (r.pos != bytes.size()) {
        throw ParseError("trailing bytes after checkpoint payload", r.pos);
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    write_file_bytes(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return parse_checkpoint(read_file_bytes(path));
}

}  // namespace ndl
