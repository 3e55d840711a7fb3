#pragma once

// Checkpoint byte layout (all integers little-endian):
//
//   magic        8 bytes  "DACTCKPT"
//   version      u32      kCheckpointVersion
//   metadata     u32 length + UTF-8 text, one `key=value` per line
//   labels       u32 count, then per label u32 length + bytes
//   vocabulary   u32 count, then per token u32 length + bytes (id order)
//   tensors      u32 count, then per tensor:
//                  u32 name length + name, u32 rank, u64 extent per axis,
//                  IEEE-754 binary32 values in row-major order
//   end marker   8 bytes  "DACTEND!"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dact/error.hpp"
#include "dact/models.hpp"

namespace dact {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'D', 'A', 'C', 'T', 'C', 'K', 'P', 'T'};
inline constexpr char kCheckpointEnd[8] = {'D', 'A', 'C', 'T', 'E', 'N', 'D', '!'};

namespace detail {

class ByteWriter {
public:
    explicit ByteWriter(std::ostream& out) : out_(out) {}

    void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

    template <typename U>
    void le(U v) {
        std::array<unsigned char, sizeof(U)> b;
        for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        raw(b.data(), b.size());
    }

    void str(const std::string& s) {
        le<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

private:
    std::ostream& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::istream& in) : in_(in) {}

    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw CheckpointError("corrupt checkpoint: unexpected end of file");
    }

    template <typename U>
    U le() {
        std::array<unsigned char, sizeof(U)> b;
        raw(b.data(), b.size());
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(U(b[i]) << (8 * i));
        return v;
    }

    std::string str(std::size_t limit = 1u << 30) {
        auto n = le<std::uint32_t>();
        if (n > limit) throw CheckpointError("corrupt checkpoint: implausible string length");
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

private:
    std::istream& in_;
};

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::map<std::string, std::string> model_metadata(const ModelConfig& c) {
    return {
        {"kind", to_string(c.kind)},
        {"sentence_dim", std::to_string(c.sentence_dim)},
        {"mlp_hidden", std::to_string(c.mlp_hidden)},
        {"word_dim", std::to_string(c.word_dim)},
        {"filters", std::to_string(c.filters)},
        {"kernel_width", std::to_string(c.kernel_width)},
        {"model_dim", std::to_string(c.model_dim)},
        {"heads", std::to_string(c.heads)},
        {"stacked", c.stacked ? "1" : "0"},
        {"dropout", format_double(c.dropout)},
    };
}

inline ModelConfig config_from_metadata(const std::map<std::string, std::string>& meta) {
    auto get = [&](const std::string& k) -> const std::string& {
        auto it = meta.find(k);
        if (it == meta.end()) throw CheckpointError("corrupt checkpoint: metadata key '" + k + "' missing");
        return it->second;
    };
    auto num = [&](const std::string& k) {
        auto v = parse_index(get(k));
        if (!v) throw CheckpointError("corrupt checkpoint: bad metadata value for '" + k + "'");
        return *v;
    };
    ModelConfig c;
    try {
        c.kind = parse_model_kind(get("kind"));
        c.dropout = std::stod(get("dropout"));
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
    c.sentence_dim = num("sentence_dim");
    c.mlp_hidden = num("mlp_hidden");
    c.word_dim = num("word_dim");
    c.filters = num("filters");
    c.kernel_width = num("kernel_width");
    c.model_dim = num("model_dim");
    c.heads = num("heads");
    c.stacked = get("stacked") == "1";
    return c;
}

/// Parameter names and shapes the architecture implies.
inline std::vector<std::pair<std::string, Shape>> expected_layout(const ModelConfig& c, std::size_t labels,
                                                                  std::size_t vocab) {
    std::vector<std::pair<std::string, Shape>> out;
    std::size_t features = 0;
    switch (c.kind) {
        case ModelKind::mlp:
            out.push_back({"hidden.W", {c.mlp_hidden, 2 * c.sentence_dim}});
            out.push_back({"hidden.b", {c.mlp_hidden}});
            features = c.mlp_hidden;
            break;
        case ModelKind::cnn:
            out.push_back({"embedding", {vocab, c.word_dim}});
            out.push_back({"conv.kernels", {c.filters, c.kernel_width, c.word_dim}});
            out.push_back({"conv.bias", {c.filters}});
            features = c.filters + c.sentence_dim;
            break;
        case ModelKind::mhsatt:
            out.push_back({"embedding", {vocab, c.model_dim}});
            for (const char* n : {"attention.W_Q", "attention.W_K", "attention.W_V", "attention.W_O"})
                out.push_back({n, {c.model_dim, c.model_dim}});
            features = c.model_dim + c.sentence_dim;
            break;
    }
    out.push_back({kHeadWeight, {labels, features}});
    out.push_back({kHeadBias, {labels}});
    return out;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Classifier<float>& model) {
    detail::ByteWriter w(out);
    w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
    w.le<std::uint32_t>(kCheckpointVersion);
    std::string meta;
    for (const auto& [k, v] : detail::model_metadata(model.config)) meta += k + "=" + v + "\n";
    w.str(meta);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(model.labels.size()));
    for (const auto& t : model.labels.tags()) w.str(t);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(model.vocab.size()));
    for (const auto& t : model.vocab.tokens()) w.str(t);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(model.params.size()));
    for (const auto& p : model.params.entries()) {
        w.str(p.name);
        w.le<std::uint32_t>(static_cast<std::uint32_t>(p.value.rank()));
        for (auto d : p.value.shape()) w.le<std::uint64_t>(d);
        for (float v : p.value.values()) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
    }
    w.raw(kCheckpointEnd, sizeof kCheckpointEnd);
}

/// Reads a checkpoint. When `expected` is set, a different architecture tag is
/// rejected.
inline Classifier<float> read_checkpoint(std::istream& in, std::optional<ModelKind> expected = std::nullopt) {
    detail::ByteReader r(in);
    char magic[8];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw CheckpointError("corrupt checkpoint: bad magic");
    const auto version = r.le<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    std::map<std::string, std::string> meta;
    {
        std::istringstream ms(r.str());
        std::string line;
        while (std::getline(ms, line)) {
            auto eq = line.find('=');
            if (eq == std::string::npos) throw CheckpointError("corrupt checkpoint: bad metadata line");
            meta[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    Classifier<float> m;
    m.config = detail::config_from_metadata(meta);
    if (expected && *expected != m.config.kind) {
        throw CheckpointError("architecture mismatch: checkpoint holds a " + to_string(m.config.kind) +
                              " model, expected " + to_string(*expected));
    }
    const auto nlabels = r.le<std::uint32_t>();
    for (std::uint32_t i = 0; i < nlabels; ++i) m.labels.add(r.str());
    const auto ntokens = r.le<std::uint32_t>();
    for (std::uint32_t i = 0; i < ntokens; ++i) {
        auto tok = r.str();
        if (i < 2) {
            if (tok != m.vocab.token(static_cast<std::int32_t>(i))) throw CheckpointError("corrupt checkpoint: reserved tokens missing");
            continue;
        }
        if (m.vocab.add(tok) != static_cast<std::int32_t>(i)) throw CheckpointError("corrupt checkpoint: duplicate token");
    }
    const auto layout = detail::expected_layout(m.config, m.labels.size(), m.vocab.size());
    const auto ntensors = r.le<std::uint32_t>();
    if (ntensors != layout.size()) {
        throw CheckpointError("checkpoint holds " + std::to_string(ntensors) + " tensors, a " +
                              to_string(m.config.kind) + " model has " + std::to_string(layout.size()));
    }
    for (const auto& [name, shape] : layout) {
        auto got = r.str(4096);
        if (got != name) throw CheckpointError("checkpoint tensor '" + got + "' where '" + name + "' was expected");
        const auto rank = r.le<std::uint32_t>();
        if (rank > 8) throw CheckpointError("corrupt checkpoint: implausible rank");
        Shape s(rank);
        for (auto& d : s) d = static_cast<std::size_t>(r.le<std::uint64_t>());
        if (s != shape) {
            throw CheckpointError("tensor '" + name + "' has shape " + shape_string(s) + ", architecture requires " +
                                  shape_string(shape));
        }
        std::vector<float> data(shape_size(s));
        for (auto& v : data) v = std::bit_cast<float>(r.le<std::uint32_t>());
        m.params.add(name, Tensor<float>(s, std::move(data)));
    }
    char end[8];
    r.raw(end, sizeof end);
    if (std::memcmp(end, kCheckpointEnd, sizeof end) != 0) throw CheckpointError("corrupt checkpoint: bad end marker");
    return m;
}

inline void save_checkpoint(const Classifier<float>& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    write_checkpoint(out, model);
    if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

inline Classifier<float> load_checkpoint(const std::string& path, std::optional<ModelKind> expected = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in, expected);
}

}  // namespace dact
