#include "hrcloud/visualize.hpp"

namespace hrcloud {

namespace {
void check_binary_pair(const Image& prediction, const Image& label) {
    if (prediction.height != label.height || prediction.width != label.width)
        throw ShapeError("overlay: prediction and label shapes differ");
    if (prediction.channels != 1 || label.channels != 1)
        throw ShapeError("overlay: inputs must be single-channel binary masks");
    for (float v : prediction.data)
        if (v != 0.0f && v != 1.0f) throw DataError("overlay: prediction mask is not binary");
    for (float v : label.data)
        if (v != 0.0f && v != 1.0f) throw DataError("overlay: label mask is not binary");
}
}  // namespace

ConfusionCounts confusion_counts(const Image& prediction, const Image& label) {
    check_binary_pair(prediction, label);
    ConfusionCounts c;
    for (size_t i = 0; i < prediction.data.size(); ++i) {
        const bool p = prediction.data[i] == 1.0f;
        const bool t = label.data[i] == 1.0f;
        if (p && t)
            ++c.tp;
        else if (!p && !t)
            ++c.tn;
        else if (p && !t)
            ++c.fp;
        else
            ++c.fn;
    }
    return c;
}

Image render_overlay(const Image& prediction, const Image& label) {
    check_binary_pair(prediction, label);
    Image out(prediction.height, prediction.width, 3);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const bool p = prediction.at(y, x) == 1.0f;
            const bool t = label.at(y, x) == 1.0f;
            float r = 0, g = 0, b = 0;
            if (p && t) {
                r = g = b = 1.0f;  // TP white
            } else if (p && !t) {
                r = 1.0f;  // FP red
            } else if (!p && t) {
                b = 1.0f;  // FN blue
            }  // TN stays black
            out.at(y, x, 0) = r;
            out.at(y, x, 1) = g;
            out.at(y, x, 2) = b;
        }
    return out;
}

}  // namespace hrcloud
