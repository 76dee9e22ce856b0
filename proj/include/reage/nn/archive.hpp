#pragma once

// Key -> array container used for checkpoints.
//
// Layout (all integers little-endian):
//
//   offset 0   8 bytes   magic "REAGEARC"
//   offset 8   u32       format version (currently 1)
//   offset 12  u64       header length L in bytes
//   offset 20  L bytes   UTF-8 JSON header:
//                          { "meta": <free-form object>,
//                            "arrays": [ { "key": str, "shape": [c, d, h, w],
//                                          "offset": u64, "count": u64 }, ... ] }
//   offset 20+L          payload: float32 little-endian values; each array
//                        occupies [offset, offset + 4 * count) of the payload.
//
// Arrays are stored in key order, so identical contents produce identical bytes.

#include "reage/core/error.hpp"
#include "reage/nn/tensor.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

namespace reage::nn {

class ArrayArchive {
public:
    static constexpr char kMagic[8] = {'R', 'E', 'A', 'G', 'E', 'A', 'R', 'C'};
    static constexpr std::uint32_t kVersion = 1;

    nlohmann::json& meta() { return meta_; }
    const nlohmann::json& meta() const { return meta_; }
    const std::map<std::string, Tensor<float>>& arrays() const { return arrays_; }

    bool contains(const std::string& key) const { return arrays_.count(key) != 0; }

    template <typename T>
    void put(const std::string& key, const Tensor<T>& t)
    {
        arrays_[key] = t.template cast<float>();
    }

    const Tensor<float>& get(const std::string& key) const
    {
        auto it = arrays_.find(key);
        if (it == arrays_.end()) throw IoError("archive has no array '" + key + "'");
        return it->second;
    }

    /// Copies a stored array into `dst`, which must already have the stored shape.
    template <typename T>
    void read_into(const std::string& key, Tensor<T>& dst) const
    {
        const auto& src = get(key);
        if (!(src.shape() == dst.shape()))
            throw IoError("archive array '" + key + "' has shape " + src.shape().str() + ", expected " +
                          dst.shape().str());
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<T>(src[i]);
    }

    void save(const std::filesystem::path& path) const
    {
        static_assert(std::endian::native == std::endian::little, "archive writer assumes little-endian host");
        nlohmann::json header;
        header["meta"] = meta_;
        header["arrays"] = nlohmann::json::array();
        std::uint64_t offset = 0;
        for (const auto& [key, t] : arrays_) {
            const auto& s = t.shape();
            header["arrays"].push_back(
                {{"key", key}, {"shape", {s.c, s.d, s.h, s.w}}, {"offset", offset}, {"count", t.size()}});
            offset += 4 * t.size();
        }
        const std::string text = header.dump();
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write archive " + path.string());
        const std::uint32_t version = kVersion;
        const std::uint64_t len = text.size();
        out.write(kMagic, 8);
        out.write(reinterpret_cast<const char*>(&version), 4);
        out.write(reinterpret_cast<const char*>(&len), 8);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto& [key, t] : arrays_)
            out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(4 * t.size()));
        if (!out) throw IoError("failed writing archive " + path.string());
    }

    static ArrayArchive load(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open archive " + path.string());
        char magic[8];
        std::uint32_t version = 0;
        std::uint64_t len = 0;
        in.read(magic, 8);
        in.read(reinterpret_cast<char*>(&version), 4);
        in.read(reinterpret_cast<char*>(&len), 8);
        if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError(path.string() + " is not a reage archive");
        if (version != kVersion) throw IoError("unsupported archive version " + std::to_string(version));
        std::string text(len, '\0');
        in.read(text.data(), static_cast<std::streamsize>(len));
        if (!in) throw IoError("truncated archive header in " + path.string());
        ArrayArchive ar;
        nlohmann::json header;
        try {
            header = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("corrupt archive header in " + path.string() + ": " + e.what());
        }
        ar.meta_ = header.value("meta", nlohmann::json::object());
        const auto payload_start = in.tellg();
        for (const auto& entry : header.at("arrays")) {
            const auto shape = entry.at("shape");
            Tensor<float> t(Shape{shape[0].get<int>(), shape[1].get<int>(), shape[2].get<int>(), shape[3].get<int>()});
            if (t.size() != entry.at("count").get<std::uint64_t>())
                throw IoError("archive entry count mismatch for " + entry.at("key").get<std::string>());
            in.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
            in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(4 * t.size()));
            if (!in) throw IoError("truncated archive payload in " + path.string());
            ar.arrays_[entry.at("key").get<std::string>()] = std::move(t);
        }
        return ar;
    }

private:
    nlohmann::json meta_ = nlohmann::json::object();
    std::map<std::string, Tensor<float>> arrays_;
};

} // namespace reage::nn
