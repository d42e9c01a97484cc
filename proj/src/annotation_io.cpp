#include "irforge/annotation_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "irforge/errors.hpp"
#include "irforge/png_io.hpp"

namespace irforge {

namespace {

namespace fs = std::filesystem;

void write_text_atomic(const fs::path& target, const std::string& content) {
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot create file: " + target.string());
        out << content;
        if (!out) throw IoError("write failed: " + target.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename failed: " + target.string());
}

}  // namespace

void write_annotation(const std::string& dir, const Annotation& ann, int compression_level) {
    fs::create_directories(dir);

    std::string boxes;
    for (const BBox& b : ann.boxes) {
        char line[64];
        std::snprintf(line, sizeof(line), "%d %d %d %d\n", b.x_min, b.y_min, b.x_max, b.y_max);
        boxes += line;
    }
    write_text_atomic(fs::path(dir) / "boxes.txt", boxes);

    std::string points = "cx,cy\n";
    for (const PointF& p : ann.points) {
        char line[64];
        std::snprintf(line, sizeof(line), "%.2f,%.2f\n", p.x, p.y);
        points += line;
    }
    write_text_atomic(fs::path(dir) / "points.csv", points);

    write_mask_png((fs::path(dir) / "mask.png").string(), ann.mask, compression_level);
}

Annotation read_annotation(const std::string& dir) {
    Annotation ann;

    fs::path boxes_path = fs::path(dir) / "boxes.txt";
    std::ifstream boxes(boxes_path);
    if (!boxes) throw IoError("cannot open: " + boxes_path.string());
    std::string line;
    while (std::getline(boxes, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int x0, y0, x1, y1;
        if (!(ss >> x0 >> y0 >> x1 >> y1))
            throw IoError("malformed box line in " + boxes_path.string() + ": " + line);
        ann.boxes.emplace_back(x0, y0, x1, y1);
    }

    fs::path points_path = fs::path(dir) / "points.csv";
    std::ifstream points(points_path);
    if (!points) throw IoError("cannot open: " + points_path.string());
    std::getline(points, line);  // header
    if (line != "cx,cy") throw IoError("bad points.csv header in " + points_path.string());
    while (std::getline(points, line)) {
        if (line.empty()) continue;
        PointF p;
        if (std::sscanf(line.c_str(), "%lf,%lf", &p.x, &p.y) != 2)
            throw IoError("malformed point line in " + points_path.string() + ": " + line);
        ann.points.push_back(p);
    }

    if (ann.points.size() != ann.boxes.size())
        throw IoError("box/point count mismatch in " + dir);

    ann.mask = read_mask_png((fs::path(dir) / "mask.png").string());
    return ann;
}

}  // namespace irforge
