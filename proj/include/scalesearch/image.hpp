#pragma once

#include <string>
#include <vector>

namespace scalesearch {

// Small integer matrix standing in for an image. Cell values live in
// [0, 255]; everything that manipulates images in this project operates on
// these deterministic grids.
struct ToyImage {
    int rows = 0;
    int cols = 0;
    std::vector<int> cells;  // row-major, rows * cols entries

    int& at(int r, int c) { return cells[static_cast<std::size_t>(r) * cols + c]; }
    int at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }

    bool valid() const {
        return rows > 0 && cols > 0 &&
               cells.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }

    static ToyImage filled(int rows, int cols, int value) {
        ToyImage img;
        img.rows = rows;
        img.cols = cols;
        img.cells.assign(static_cast<std::size_t>(rows) * cols, value);
        return img;
    }

    bool operator==(const ToyImage&) const = default;
};

// Compact JSON form {"rows": r, "cols": c, "cells": [...]} shared by the
// dataset image files and the external-command protocol.
std::string to_json_string(const ToyImage& img);
ToyImage toy_image_from_json(const std::string& text);
ToyImage load_toy_image(const std::string& path);

}  // namespace scalesearch
