/*
  Copyright (c) 2026 the nmtprune authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

  http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

#include "core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/errors.hpp"

namespace nmtprune {

namespace {

constexpr char kMagic[8] = {'N', 'M', 'T', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_vocab(std::string& out, const Vocabulary& vocab) {
    put_u32(out, static_cast<std::uint32_t>(vocab.size()));
    for (const std::string& w : vocab.words()) {
        put_u32(out, static_cast<std::uint32_t>(w.size()));
        out.append(w);
    }
}

std::string pack_bits(const MaskMatrix& mask) {
    std::string out((mask.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (mask.bits[i]) out[i >> 3] |= static_cast<char>(1 << (i & 7));
    }
    return out;
}

struct Reader {
    const std::string& data;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > data.size()) {
            throw_format("checkpoint truncated at offset " + std::to_string(pos) +
                         " while reading " + what);
        }
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i]))
                 << (8 * i);
        }
        pos += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i]))
                 << (8 * i);
        }
        pos += 8;
        return v;
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(data[pos++]);
    }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string out = data.substr(pos, n);
        pos += n;
        return out;
    }
};

Vocabulary read_vocab(Reader& r, const char* what) {
    const std::uint32_t count = r.u32(what);
    std::vector<std::string> words;
    words.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = r.u32(what);
        words.push_back(r.bytes(len, what));
    }
    return Vocabulary(std::move(words));
}

MaskMatrix unpack_bits(Reader& r, std::size_t rows, std::size_t cols) {
    MaskMatrix mask(rows, cols, 0);
    const std::string packed = r.bytes((mask.size() + 7) / 8, "mask bits");
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        mask.bits[i] = (static_cast<unsigned char>(packed[i >> 3]) >> (i & 7)) & 1;
    }
    return mask;
}

std::uint8_t kind_code(WeightClassKind k) { return static_cast<std::uint8_t>(k); }

WeightClassKind kind_from_code(std::uint8_t code, std::size_t offset) {
    if (code > static_cast<std::uint8_t>(WeightClassKind::softmax)) {
        throw_format("checkpoint: unknown class kind " + std::to_string(code) +
                     " at offset " + std::to_string(offset));
    }
    return static_cast<WeightClassKind>(code);
}

} // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt, CheckpointFormat format,
                                 bool include_mask) {
    const bool sparse = format == CheckpointFormat::sparse;
    if (sparse && !ckpt.mask.has_value()) {
        throw_state("sparse checkpoint requires a mask");
    }
    if (ckpt.mask.has_value() && !ckpt.mask->shapes_match(ckpt.registry)) {
        throw_invalid("checkpoint: mask shapes do not match the registry");
    }
    for (const auto& e : ckpt.registry.entries()) {
        if (!e.weights.all_finite()) {
            throw_numeric("checkpoint: non-finite weights in class " + e.id.name());
        }
    }
    const bool with_mask = sparse || (include_mask && ckpt.mask.has_value());

    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    out.push_back(static_cast<char>(format));
    out.push_back(static_cast<char>(ckpt.phase));
    out.push_back(static_cast<char>(with_mask ? 1 : 0));
    out.push_back('\0');
    put_u64(out, ckpt.seed);

    const ModelConfig& config = ckpt.config();
    put_u32(out, static_cast<std::uint32_t>(config.layers));
    put_u32(out, static_cast<std::uint32_t>(config.hidden));
    put_u32(out, static_cast<std::uint32_t>(config.source_vocab));
    put_u32(out, static_cast<std::uint32_t>(config.target_vocab));
    put_f64(out, config.dropout);

    put_vocab(out, ckpt.source_vocab);
    put_vocab(out, ckpt.target_vocab);

    put_u32(out, static_cast<std::uint32_t>(ckpt.registry.class_count()));
    for (std::size_t c = 0; c < ckpt.registry.class_count(); ++c) {
        const auto& entry = ckpt.registry.entries()[c];
        out.push_back(static_cast<char>(kind_code(entry.id.kind)));
        put_u32(out, static_cast<std::uint32_t>(entry.id.layer));
        put_u32(out, static_cast<std::uint32_t>(entry.weights.rows));
        put_u32(out, static_cast<std::uint32_t>(entry.weights.cols));
        if (sparse) {
            const MaskMatrix& mask = ckpt.mask->entries[c].mask;
            out += pack_bits(mask);
            for (std::size_t i = 0; i < mask.bits.size(); ++i) {
                if (mask.bits[i]) put_f64(out, entry.weights.values[i]);
            }
        } else {
            for (double v : entry.weights.values) put_f64(out, v);
            if (with_mask) out += pack_bits(ckpt.mask->entries[c].mask);
        }
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    Reader r{bytes};
    const std::string magic = r.bytes(sizeof(kMagic), "magic");
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
        throw_format("checkpoint: bad magic at offset 0");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kVersion) {
        throw_format("checkpoint: unsupported version " + std::to_string(version) +
                     " (expected " + std::to_string(kVersion) + ")");
    }
    const std::uint8_t format_code = r.u8("format");
    if (format_code > 1) {
        throw_format("checkpoint: unknown format byte " +
                     std::to_string(format_code));
    }
    const bool sparse = format_code == 1;
    const std::uint8_t phase_code = r.u8("phase");
    if (phase_code > static_cast<std::uint8_t>(Phase::sparse_scratch)) {
        throw_format("checkpoint: unknown phase tag " + std::to_string(phase_code));
    }
    const bool with_mask = r.u8("mask flag") != 0;
    r.u8("padding");
    if (sparse && !with_mask) {
        throw_format("checkpoint: sparse format without mask flag");
    }

    Checkpoint ckpt;
    ckpt.seed = r.u64("seed");
    ckpt.phase = static_cast<Phase>(phase_code);

    ModelConfig config;
    config.layers = r.u32("layers");
    config.hidden = r.u32("hidden size");
    config.source_vocab = r.u32("source vocab size");
    config.target_vocab = r.u32("target vocab size");
    config.dropout = r.f64("dropout");
    config.validate();

    ckpt.source_vocab = read_vocab(r, "source vocabulary");
    ckpt.target_vocab = read_vocab(r, "target vocabulary");
    if (ckpt.source_vocab.size() != config.source_vocab ||
        ckpt.target_vocab.size() != config.target_vocab) {
        throw_format("checkpoint: vocabulary sizes disagree with the config");
    }

    ckpt.registry = ClassRegistry(config);
    const std::uint32_t class_count = r.u32("class count");
    if (class_count != ckpt.registry.class_count()) {
        throw_format("checkpoint: " + std::to_string(class_count) +
                     " classes, config implies " +
                     std::to_string(ckpt.registry.class_count()));
    }
    PruneMask mask;
    for (std::size_t c = 0; c < class_count; ++c) {
        const std::size_t header_offset = r.pos;
        const WeightClassKind kind = kind_from_code(r.u8("class kind"), header_offset);
        const std::uint32_t layer = r.u32("class layer");
        const WeightClassId id{kind, layer};
        auto& entry = ckpt.registry.entries()[c];
        if (!(entry.id == id)) {
            throw_format("checkpoint: class " + std::to_string(c) + " is " +
                         id.name() + ", expected " + entry.id.name() +
                         " at offset " + std::to_string(header_offset));
        }
        const std::uint32_t rows = r.u32("class rows");
        const std::uint32_t cols = r.u32("class cols");
        if (rows != entry.weights.rows || cols != entry.weights.cols) {
            throw_format("checkpoint: class " + id.name() + " has shape " +
                         shape_of(rows, cols) + ", config implies " +
                         entry.weights.shape_str());
        }
        if (sparse) {
            MaskMatrix m = unpack_bits(r, rows, cols);
            for (std::size_t i = 0; i < m.bits.size(); ++i) {
                entry.weights.values[i] = m.bits[i] ? r.f64("sparse value") : 0.0;
            }
            mask.entries.push_back({id, std::move(m)});
        } else {
            for (double& v : entry.weights.values) v = r.f64("weight");
            if (with_mask) mask.entries.push_back({id, unpack_bits(r, rows, cols)});
        }
        if (!entry.weights.all_finite()) {
            throw_format("checkpoint: non-finite weights in class " + id.name());
        }
    }
    if (r.pos != bytes.size()) {
        throw_format("checkpoint: " + std::to_string(bytes.size() - r.pos) +
                     " trailing bytes at offset " + std::to_string(r.pos));
    }
    if (with_mask) ckpt.mask = std::move(mask);
    return ckpt;
}

namespace {

void write_file(const std::string& path, const std::string& bytes) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
        if (ec) throw_io("cannot create directory for " + path + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw_io("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (in.bad()) throw_io("read failed: " + path);
    return bytes;
}

} // namespace

void save_dense(const Checkpoint& ckpt, const std::string& path) {
    write_file(path, serialize_checkpoint(ckpt, CheckpointFormat::dense));
}

SparseReport save_sparse(const Checkpoint& ckpt, const std::string& path) {
    if (!ckpt.mask.has_value()) {
        throw_state("save_sparse: checkpoint carries no mask");
    }
    const std::string sparse = serialize_checkpoint(ckpt, CheckpointFormat::sparse);
    write_file(path, sparse);
    SparseReport report;
    report.sparse_bytes = sparse.size();
    report.dense_bytes =
        serialize_checkpoint(ckpt, CheckpointFormat::dense, /*include_mask=*/false)
            .size();
    report.reduction = 1.0 - static_cast<double>(report.sparse_bytes) /
                                 static_cast<double>(report.dense_bytes);
    return report;
}

Checkpoint load_checkpoint(const std::string& path) {
    return deserialize_checkpoint(read_file(path));
}

} // namespace nmtprune
