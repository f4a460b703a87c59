#pragma once

#include <string>
#include <vector>

#include "hrcloud/image.hpp"
#include "hrcloud/tensor.hpp"

namespace hrcloud {

struct SceneImage {
    Image pixels;  // HxWx3 in [0,1]
    std::string scene_id;
    std::string source_path;
};

struct LabelMask {
    Image labels;  // HxWx1 with values exactly 0 or 1
    std::string scene_id;
};

// Geometry that makes crop -> stitch an exact inverse: the scene is
// mirror-padded up to the next tile multiple and the padding is dropped on
// stitch.
struct TileGrid {
    int tile_size = 0;
    int scene_height = 0;
    int scene_width = 0;
    int rows = 0;
    int cols = 0;
    int pad_bottom = 0;
    int pad_right = 0;

    int tile_count() const { return rows * cols; }
    // Top-left corner of tile (r, c) in padded-scene coordinates.
    std::pair<int, int> tile_origin(int r, int c) const { return {r * tile_size, c * tile_size}; }
};

struct Tile {
    Image pixels;  // tile_size x tile_size, same channel count as the scene
    int row = 0;
    int col = 0;
    std::string scene_id;
};

TileGrid plan_grid(int scene_height, int scene_width, int tile_size);

// Mirror extension index (reflect without repeating the edge sample, folded
// for arbitrarily deep padding).
int mirror_index(int i, int n);

// Generic crop of any HxWxC image into row-major tiles.
std::vector<Image> crop_map(const Image& map, const TileGrid& grid);
std::vector<Tile> crop_scene(const SceneImage& scene, const TileGrid& grid);

// Exact inverse of crop_map: places tiles back and drops the padding.
Image stitch_tiles(const std::vector<Image>& tiles, const TileGrid& grid);

// Two-channel one-hot target from a {0,1} label tile: channel 0 background,
// channel 1 cloud. Output is (2, H, W).
Tensor encode_label(const Image& label_tile);

}  // namespace hrcloud
