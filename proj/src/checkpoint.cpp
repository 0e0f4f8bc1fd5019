#include "ecfc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include <zlib.h>

#include "ecfc/config_io.hpp"
#include "ecfc/error.hpp"

namespace ecfc {

namespace {

constexpr std::string_view kMagic = "ECFC-CKPT";
constexpr std::size_t kPreamble = 9 + 1 + 8;  // magic, version, header length

void put_u64(std::string& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::uint64_t get_u64(const char* p) {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[k])) << (8 * k);
    return v;
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[k])) << (8 * k);
    return v;
}

struct Tensor {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    const double* data;
};

[[noreturn]] void fail(CheckpointError::Kind kind, const std::string& what) {
    throw CheckpointError(kind, "checkpoint: " + what);
}

}  // namespace

std::uint32_t crc32_of(std::span<const char> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
    std::size_t left = bytes.size();
    while (left > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = crc32(crc, p, chunk);
        p += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::string encode_checkpoint(const Checkpoint& ck) {
    const auto& shape = ck.model.shape();
    std::vector<Tensor> tensors;
    const auto& params = ck.model.params();
    for (const auto& spec : params.layout()) {
        tensors.push_back({spec.name, spec.rows, spec.cols, params.values().data() + spec.offset});
    }
    if (ck.state.h.size() != shape.layer_count) throw ContractError("checkpoint state does not match the model");
    for (std::size_t l = 0; l < shape.layer_count; ++l) {
        const auto& h = ck.state.h[l];
        const auto& c = ck.state.c[l];
        tensors.push_back({"state.h" + std::to_string(l), std::size_t(h.rows()), std::size_t(h.cols()), h.data()});
        tensors.push_back({"state.c" + std::to_string(l), std::size_t(c.rows()), std::size_t(c.cols()), c.data()});
    }
    if (ck.adam) {
        tensors.push_back({"adam.m", ck.adam->m.size(), 1, ck.adam->m.data()});
        tensors.push_back({"adam.v", ck.adam->v.size(), 1, ck.adam->v.data()});
    }

    Json manifest = Json::array();
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        manifest.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", offset}});
        offset += t.rows * t.cols * sizeof(double);
    }

    Json header;
    header["config"] = to_json(ck.config);
    header["normalizer"] = to_json(ck.normalizer);
    header["epoch"] = ck.epoch;
    header["record"] = to_json(ck.record);
    header["series_start"] = format_timestamp(ck.series_start);
    header["model"] = {{"layer_count", shape.layer_count},
                       {"units", shape.units},
                       {"in_dim", shape.in_dim},
                       {"dropout_keep", shape.dropout_keep},
                       {"input_mode", to_string(shape.input_mode)},
                       {"gate_order", "i,f,o,c"}};
    if (ck.adam) {
        const auto& a = ck.adam->config;
        header["adam"] = {{"step", ck.adam->step},
                          {"learning_rate", a.learning_rate},
                          {"beta1", a.beta1},
                          {"beta2", a.beta2},
                          {"epsilon", a.epsilon}};
    } else {
        header["adam"] = nullptr;
    }
    header["tensors"] = manifest;
    const std::string header_text = header.dump();

    std::string out;
    out.reserve(kPreamble + header_text.size() + offset + 4);
    out.append(kMagic);
    out.push_back(static_cast<char>(kCheckpointVersion));
    put_u64(out, header_text.size());
    out += header_text;
    for (const auto& t : tensors) {
        for (std::size_t k = 0; k < t.rows * t.cols; ++k) put_u64(out, std::bit_cast<std::uint64_t>(t.data[k]));
    }
    put_u32(out, crc32_of(std::span<const char>(out).subspan(kMagic.size() + 1)));
    return out;
}

Checkpoint decode_checkpoint(std::span<const char> bytes) {
    using Kind = CheckpointError::Kind;
    const std::size_t magic_seen = std::min(bytes.size(), kMagic.size());
    if (std::memcmp(bytes.data(), kMagic.data(), magic_seen) != 0) fail(Kind::BadMagic, "not an ECFC checkpoint");
    if (bytes.size() < kPreamble + 4) fail(Kind::Truncated, "file ends inside the preamble");
    const auto version = static_cast<std::uint8_t>(bytes[kMagic.size()]);
    if (version != kCheckpointVersion) {
        fail(Kind::Version, "format version " + std::to_string(version) + " is not supported (expected " +
                                std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint64_t header_len = get_u64(bytes.data() + kMagic.size() + 1);
    if (header_len > bytes.size() || kPreamble + header_len + 4 > bytes.size()) {
        fail(Kind::Truncated, "file ends inside the header");
    }
    const auto payload = bytes.subspan(kMagic.size() + 1, bytes.size() - kMagic.size() - 1 - 4);
    const bool crc_ok = crc32_of(payload) == get_u32(bytes.data() + bytes.size() - 4);

    Json header;
    try {
        header = Json::parse(std::string_view(bytes.data() + kPreamble, header_len));
    } catch (const Json::exception&) {
        if (!crc_ok) fail(Kind::Checksum, "CRC32 mismatch");
        fail(Kind::Malformed, "header is not valid JSON");
    }

    try {
        std::size_t tensor_bytes = 0;
        for (const auto& t : header.at("tensors")) {
            tensor_bytes = std::max(tensor_bytes, t.at("offset").get<std::size_t>() +
                                                      t.at("shape").at(0).get<std::size_t>() *
                                                          t.at("shape").at(1).get<std::size_t>() * sizeof(double));
        }
        const std::size_t expected = kPreamble + header_len + tensor_bytes + 4;
        if (bytes.size() < expected) fail(Kind::Truncated, "file ends inside the tensor block");
        if (bytes.size() > expected) fail(Kind::Malformed, "trailing bytes after the tensor block");
        if (!crc_ok) fail(Kind::Checksum, "CRC32 mismatch");

        const char* block = bytes.data() + kPreamble + header_len;
        auto read_tensor = [&](const std::string& name, std::size_t rows, std::size_t cols, double* dst) {
            for (const auto& t : header.at("tensors")) {
                if (t.at("name").get<std::string>() != name) continue;
                if (t.at("shape").at(0).get<std::size_t>() != rows || t.at("shape").at(1).get<std::size_t>() != cols) {
                    fail(Kind::Malformed, "tensor " + name + " has an unexpected shape");
                }
                const char* p = block + t.at("offset").get<std::size_t>();
                for (std::size_t k = 0; k < rows * cols; ++k) dst[k] = std::bit_cast<double>(get_u64(p + 8 * k));
                return;
            }
            fail(Kind::Malformed, "tensor " + name + " missing from the manifest");
        };

        Checkpoint ck;
        ck.config = train_config_from_json(header.at("config"));
        ck.normalizer = normalizer_from_json(header.at("normalizer"));
        ck.epoch = header.at("epoch").get<std::size_t>();
        ck.record = epoch_record_from_json(header.at("record"));
        const auto start = parse_timestamp(header.at("series_start").get<std::string>());
        if (!start) fail(Kind::Malformed, "bad series_start");
        ck.series_start = *start;

        const auto& m = header.at("model");
        ModelShape shape{m.at("layer_count").get<std::size_t>(), m.at("units").get<std::size_t>(),
                         m.at("in_dim").get<std::size_t>(), m.at("dropout_keep").get<double>(),
                         input_mode_from_string(m.at("input_mode").get<std::string>())};
        ck.model = LstmModel(shape);
        auto& params = ck.model.params();
        for (const auto& spec : params.layout()) {
            read_tensor(spec.name, spec.rows, spec.cols, params.values().data() + spec.offset);
        }
        std::size_t state_batch = 1;
        for (const auto& t : header.at("tensors")) {
            if (t.at("name").get<std::string>() == "state.h0") state_batch = t.at("shape").at(1).get<std::size_t>();
        }
        ck.state = zero_state(shape, state_batch);
        for (std::size_t l = 0; l < shape.layer_count; ++l) {
            read_tensor("state.h" + std::to_string(l), shape.units, state_batch, ck.state.h[l].data());
            read_tensor("state.c" + std::to_string(l), shape.units, state_batch, ck.state.c[l].data());
        }
        if (!header.at("adam").is_null()) {
            const auto& a = header.at("adam");
            AdamState adam({a.at("learning_rate").get<double>(), a.at("beta1").get<double>(),
                            a.at("beta2").get<double>(), a.at("epsilon").get<double>()},
                           params.size());
            adam.step = a.at("step").get<std::uint64_t>();
            read_tensor("adam.m", params.size(), 1, adam.m.data());
            read_tensor("adam.v", params.size(), 1, adam.v.data());
            ck.adam = std::move(adam);
        }
        return ck;
    } catch (const Json::exception& e) {
        fail(Kind::Malformed, std::string("bad header: ") + e.what());
    } catch (const ConfigError& e) {
        fail(Kind::Malformed, std::string("bad config: ") + e.what());
    } catch (const ContractError& e) {
        fail(Kind::Malformed, std::string("bad model: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    const auto bytes = encode_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace ecfc
