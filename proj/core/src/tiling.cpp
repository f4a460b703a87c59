#include "hrcloud/tiling.hpp"

#include <algorithm>

namespace hrcloud {

TileGrid plan_grid(int scene_height, int scene_width, int tile_size) {
    if (scene_height < 1 || scene_width < 1)
        throw ConfigError("plan_grid: scene dimensions must be positive, got " +
                          std::to_string(scene_height) + "x" + std::to_string(scene_width));
    if (tile_size < 1)
        throw ConfigError("plan_grid: tile size must be positive, got " + std::to_string(tile_size));
    TileGrid g;
    g.tile_size = tile_size;
    g.scene_height = scene_height;
    g.scene_width = scene_width;
    g.rows = (scene_height + tile_size - 1) / tile_size;
    g.cols = (scene_width + tile_size - 1) / tile_size;
    g.pad_bottom = g.rows * tile_size - scene_height;
    g.pad_right = g.cols * tile_size - scene_width;
    return g;
}

int mirror_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

std::vector<Image> crop_map(const Image& map, const TileGrid& grid) {
    if (map.height != grid.scene_height || map.width != grid.scene_width)
        throw ShapeError("crop: grid planned for " + std::to_string(grid.scene_height) + "x" +
                         std::to_string(grid.scene_width) + " but map is " +
                         std::to_string(map.height) + "x" + std::to_string(map.width));
    const int t = grid.tile_size;
    const int c = map.channels;
    std::vector<Image> tiles;
    tiles.reserve(static_cast<size_t>(grid.tile_count()));
    for (int r = 0; r < grid.rows; ++r) {
        for (int q = 0; q < grid.cols; ++q) {
            Image tile(t, t, c);
            const int y0 = r * t, x0 = q * t;
            for (int y = 0; y < t; ++y) {
                const int sy = mirror_index(y0 + y, map.height);
                const int in_row_w = std::min(t, map.width - x0);
                // interior span is a straight copy; only the padded fringe reflects
                if (in_row_w > 0) {
                    const float* src = &map.data[static_cast<size_t>((int64_t(sy) * map.width + x0) * c)];
                    float* dst = &tile.data[static_cast<size_t>(int64_t(y) * t * c)];
                    std::copy(src, src + int64_t(in_row_w) * c, dst);
                }
                for (int x = std::max(in_row_w, 0); x < t; ++x) {
                    const int sx = mirror_index(x0 + x, map.width);
                    for (int ch = 0; ch < c; ++ch) tile.at(y, x, ch) = map.at(sy, sx, ch);
                }
            }
            tiles.push_back(std::move(tile));
        }
    }
    return tiles;
}

std::vector<Tile> crop_scene(const SceneImage& scene, const TileGrid& grid) {
    std::vector<Image> maps = crop_map(scene.pixels, grid);
    std::vector<Tile> tiles;
    tiles.reserve(maps.size());
    for (int r = 0; r < grid.rows; ++r)
        for (int q = 0; q < grid.cols; ++q) {
            Tile t;
            t.pixels = std::move(maps[static_cast<size_t>(r * grid.cols + q)]);
            t.row = r;
            t.col = q;
            t.scene_id = scene.scene_id;
            tiles.push_back(std::move(t));
        }
    return tiles;
}

Image stitch_tiles(const std::vector<Image>& tiles, const TileGrid& grid) {
    if (static_cast<int>(tiles.size()) != grid.tile_count())
        throw ShapeError("stitch: expected " + std::to_string(grid.tile_count()) + " tiles, got " +
                         std::to_string(tiles.size()));
    const int t = grid.tile_size;
    const int c = tiles.empty() ? 1 : tiles[0].channels;
    for (const auto& tile : tiles)
        if (tile.height != t || tile.width != t || tile.channels != c)
            throw ShapeError("stitch: inconsistent tile shape " + std::to_string(tile.height) + "x" +
                             std::to_string(tile.width) + "x" + std::to_string(tile.channels));

    Image out(grid.scene_height, grid.scene_width, c);
    for (int r = 0; r < grid.rows; ++r) {
        const int y0 = r * t;
        const int rows_here = std::min(t, grid.scene_height - y0);
        for (int q = 0; q < grid.cols; ++q) {
            const Image& tile = tiles[static_cast<size_t>(r * grid.cols + q)];
            const int x0 = q * t;
            const int cols_here = std::min(t, grid.scene_width - x0);
            for (int y = 0; y < rows_here; ++y) {
                const float* src = &tile.data[static_cast<size_t>(int64_t(y) * t * c)];
                float* dst = &out.data[static_cast<size_t>((int64_t(y0 + y) * grid.scene_width + x0) * c)];
                std::copy(src, src + int64_t(cols_here) * c, dst);
            }
        }
    }
    return out;
}

Tensor encode_label(const Image& label_tile) {
    if (label_tile.channels != 1) throw ShapeError("encode_label: label must be single-channel");
    const int h = label_tile.height, w = label_tile.width;
    Tensor t({2, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float v = label_tile.at(y, x);
            if (v != 0.0f && v != 1.0f)
                throw DataError("encode_label: non-binary label value " + std::to_string(v) +
                                " at (" + std::to_string(y) + "," + std::to_string(x) + ")");
            t[int64_t(y) * w + x] = 1.0 - v;
            t[int64_t(h) * w + int64_t(y) * w + x] = v;
        }
    return t;
}

}  // namespace hrcloud
