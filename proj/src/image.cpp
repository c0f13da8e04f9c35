#include "scalesearch/image.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "scalesearch/errors.hpp"

namespace scalesearch {

std::string to_json_string(const ToyImage& img) {
    nlohmann::ordered_json j;
    j["rows"] = img.rows;
    j["cols"] = img.cols;
    j["cells"] = img.cells;
    return j.dump();
}

ToyImage toy_image_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ExecutionError(std::string("bad image json: ") + e.what());
    }
    ToyImage img;
    try {
        img.rows = j.at("rows").get<int>();
        img.cols = j.at("cols").get<int>();
        img.cells = j.at("cells").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw ExecutionError(std::string("bad image json: ") + e.what());
    }
    if (!img.valid()) throw ExecutionError("bad image json: dimensions do not match cells");
    for (int v : img.cells) {
        if (v < 0 || v > 255) throw ExecutionError("bad image json: cell value out of [0, 255]");
    }
    return img;
}

ToyImage load_toy_image(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ExecutionError("cannot open image file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return toy_image_from_json(buf.str());
}

}  // namespace scalesearch
