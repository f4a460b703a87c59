#include "hrcloud/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "hrcloud/error.hpp"

namespace fs = std::filesystem;

namespace hrcloud {

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

std::vector<const ManifestEntry*> DatasetManifest::split_entries(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
        if (e.split == s) out.push_back(&e);
    return out;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    const fs::path base = fs::path(path).parent_path();

    DatasetManifest m;
    m.name = fs::path(path).stem().string();
    std::set<std::string> seen_ids;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() != 3)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected 3 tab-separated fields (image, mask, split), got " +
                            std::to_string(fields.size()));

        ManifestEntry e;
        auto resolve = [&](const std::string& p) {
            fs::path fp(p);
            return (fp.is_absolute() ? fp : base / fp).string();
        };
        e.image_path = resolve(fields[0]);
        e.mask_path = resolve(fields[1]);
        if (fields[2] == "train")
            e.split = Split::Train;
        else if (fields[2] == "test")
            e.split = Split::Test;
        else
            throw DataError(path + ":" + std::to_string(lineno) + ": split must be 'train' or 'test', got '" +
                            fields[2] + "'");

        if (!fs::exists(e.image_path))
            throw DataError(path + ":" + std::to_string(lineno) + ": missing image file " + e.image_path);
        if (!fs::exists(e.mask_path))
            throw DataError(path + ":" + std::to_string(lineno) + ": missing mask file " + e.mask_path);

        e.scene_id = fs::path(fields[0]).stem().string();
        if (!seen_ids.insert(e.scene_id).second)
            throw DataError(path + ":" + std::to_string(lineno) + ": duplicate scene_id '" + e.scene_id + "'");
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty())
        std::cerr << "warning: manifest " << path << " contains no entries\n";
    return m;
}

}  // namespace hrcloud
