#pragma once

#include <string>
#include <vector>

namespace hrcloud {

enum class Split { Train, Test };

struct ManifestEntry {
    std::string image_path;  // resolved absolute/relative-to-cwd path
    std::string mask_path;
    Split split = Split::Train;
    std::string scene_id;
};

struct DatasetManifest {
    std::string name;
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> split_entries(Split s) const;
};

// Parses a TSV manifest (image_path<TAB>mask_path<TAB>split per line, '#'
// comments allowed). Relative paths resolve against the manifest's
// directory; every referenced file must exist. Emits a warning on stderr for
// an empty manifest.
DatasetManifest load_manifest(const std::string& path);

const char* split_name(Split s);

}  // namespace hrcloud
