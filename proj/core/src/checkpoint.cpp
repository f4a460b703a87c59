#include "hrcloud/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hrcloud/error.hpp"

using nlohmann::json;

namespace hrcloud {

namespace {
constexpr char kMagic[8] = {'H', 'R', 'C', 'N', '0', '0', '0', '1'};

void write_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}
}  // namespace

Checkpoint Checkpoint::capture(const ParameterStore& store, AdamOptimizer* opt,
                               const std::string& config_json) {
    Checkpoint ck;
    ck.config_json = config_json;
    for (const auto& e : store.entries()) ck.tensors[e.name] = e.node->value;
    if (opt) {
        ck.adam_step = opt->step_count();
        size_t idx = 0;
        for (const auto& e : store.entries()) {
            if (!e.trainable) continue;
            ck.adam_m[e.name] = opt->first_moments()[idx];
            ck.adam_v[e.name] = opt->second_moments()[idx];
            ++idx;
        }
    }
    return ck;
}

void Checkpoint::restore(ParameterStore& store, AdamOptimizer* opt) const {
    for (const auto& e : store.entries()) {
        auto it = tensors.find(e.name);
        if (it == tensors.end()) throw DataError("checkpoint is missing tensor '" + e.name + "'");
        if (!(it->second.shape() == e.node->value.shape()))
            throw DataError("checkpoint tensor '" + e.name + "' has shape " +
                            shape_to_string(it->second.shape()) + " but the model expects " +
                            e.node->value.shape_str());
        e.node->value = it->second;
    }
    if (tensors.size() != store.entries().size())
        for (const auto& [name, t] : tensors)
            if (!store.contains(name))
                throw DataError("checkpoint tensor '" + name + "' does not exist in the model");
    if (opt) {
        opt->set_step_count(adam_step);
        size_t idx = 0;
        for (const auto& e : store.entries()) {
            if (!e.trainable) continue;
            auto mit = adam_m.find(e.name);
            auto vit = adam_v.find(e.name);
            if (mit == adam_m.end() || vit == adam_v.end())
                throw DataError("checkpoint is missing optimizer state for '" + e.name + "'");
            opt->first_moments()[idx] = mit->second;
            opt->second_moments()[idx] = vit->second;
            ++idx;
        }
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    json header;
    header["format"] = 1;
    header["config"] = ck.config_json.empty() ? json(nullptr) : json::parse(ck.config_json);
    header["epoch"] = ck.epoch;
    header["global_step"] = ck.global_step;
    header["adam_step"] = ck.adam_step;
    header["rng"] = ck.rng_states;

    json table = json::array();
    uint64_t offset = 0;
    auto add_group = [&](const char* kind, const std::map<std::string, Tensor>& group) {
        for (const auto& [name, t] : group) {
            json e;
            e["name"] = name;
            e["kind"] = kind;
            e["shape"] = t.shape();
            e["offset"] = offset;
            e["count"] = t.numel();
            table.push_back(e);
            offset += uint64_t(t.numel()) * sizeof(double);
        }
    };
    add_group("tensor", ck.tensors);
    add_group("adam_m", ck.adam_m);
    add_group("adam_v", ck.adam_v);
    header["tensors"] = table;

    const std::string hs = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_u64(out, hs.size());
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    auto dump_group = [&](const std::map<std::string, Tensor>& group) {
        for (const auto& [name, t] : group) {
            (void)name;
            out.write(reinterpret_cast<const char*>(t.data()),
                      static_cast<std::streamsize>(t.numel() * sizeof(double)));
        }
    };
    dump_group(ck.tensors);
    dump_group(ck.adam_m);
    dump_group(ck.adam_v);
    if (!out) throw DataError("short write to checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError(path + ": not a checkpoint archive");
    const uint64_t hlen = read_u64(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (in.gcount() != static_cast<std::streamsize>(hlen))
        throw DataError(path + ": truncated checkpoint header");

    json header = json::parse(hs, nullptr, /*allow_exceptions=*/false);
    if (header.is_discarded()) throw DataError(path + ": malformed checkpoint header");

    Checkpoint ck;
    if (!header["config"].is_null()) ck.config_json = header["config"].dump();
    ck.epoch = header.value("epoch", 0);
    ck.global_step = header.value("global_step", int64_t(0));
    ck.adam_step = header.value("adam_step", int64_t(0));
    if (header.contains("rng"))
        for (auto& [k, v] : header["rng"].items()) ck.rng_states[k] = v.get<std::string>();

    const std::streampos data_start = in.tellg();
    for (const auto& e : header["tensors"]) {
        const std::string name = e["name"].get<std::string>();
        const std::string kind = e["kind"].get<std::string>();
        std::vector<int> shape = e["shape"].get<std::vector<int>>();
        const uint64_t offset = e["offset"].get<uint64_t>();
        Tensor t(shape);
        in.seekg(data_start + std::streampos(offset));
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(t.numel() * sizeof(double)))
            throw DataError(path + ": truncated tensor data for '" + name + "'");
        if (kind == "tensor")
            ck.tensors[name] = std::move(t);
        else if (kind == "adam_m")
            ck.adam_m[name] = std::move(t);
        else if (kind == "adam_v")
            ck.adam_v[name] = std::move(t);
        else
            throw DataError(path + ": unknown tensor kind '" + kind + "'");
    }
    return ck;
}

}  // namespace hrcloud
