#pragma once

#include <adapt/analytics/image.hpp>
#include <adapt/analytics/segment.hpp>
#include <adapt/error.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace adapt::annotate {

using Rgb = std::array<std::uint8_t, 3>;

struct ColorEntry {
    std::string name;
    std::uint8_t id = 0;
    Rgb rgb{};
};

/// Paint colours of a label layer. Pure black is reserved for "no label".
class ColorTable {
public:
    ColorTable() = default;
    explicit ColorTable(std::vector<ColorEntry> entries) : entries_(std::move(entries)) { validate(); }

    /// Purple for frozen water and green for everything else, the palette
    /// the annotators painted with.
    [[nodiscard]] static ColorTable defaults() {
        return ColorTable({{"frozen-water", analytics::kFrozenWater, {160, 32, 240}},
                           {"background", analytics::kBackground, {0, 255, 0}}});
    }

    /// `{ "class_name": {"id": n, "rgb": [r, g, b]}, ... }`
    [[nodiscard]] static ColorTable from_json(const nlohmann::json& j) {
        if (!j.is_object())
            throw ParseError("color table must be a JSON object");
        std::vector<ColorEntry> entries;
        for (const auto& [name, v] : j.items()) {
            if (!v.contains("id") || !v.contains("rgb") || !v["rgb"].is_array() || v["rgb"].size() != 3)
                throw ParseError("color table entry '" + name + "' needs \"id\" and a 3-element \"rgb\"");
            ColorEntry e;
            e.name = name;
            const int id = v["id"].get<int>();
            if (id < 0 || id > 254)
                throw ParseError("class id for '" + name + "' must be in [0, 254]");
            e.id = static_cast<std::uint8_t>(id);
            for (int k = 0; k < 3; ++k) {
                const int c = v["rgb"][k].get<int>();
                if (c < 0 || c > 255)
                    throw ParseError("rgb component out of range in '" + name + "'");
                e.rgb[k] = static_cast<std::uint8_t>(c);
            }
            entries.push_back(e);
        }
        try {
            return ColorTable(std::move(entries));
        } catch (const ContractError& e) {
            throw ParseError(e.what());
        }
    }

    [[nodiscard]] static ColorTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open color table '" + path + "'");
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("color table '" + path + "': " + e.what());
        }
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& e : entries_)
            j[e.name] = {{"id", e.id}, {"rgb", {e.rgb[0], e.rgb[1], e.rgb[2]}}};
        return j;
    }

    [[nodiscard]] std::optional<std::uint8_t> lookup(Rgb c) const {
        for (const auto& e : entries_)
            if (e.rgb == c)
                return e.id;
        return std::nullopt;
    }

    [[nodiscard]] const std::vector<ColorEntry>& entries() const { return entries_; }

private:
    void validate() const {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].rgb == Rgb{0, 0, 0})
                throw ContractError("black is reserved for unlabeled pixels");
            for (std::size_t k = i + 1; k < entries_.size(); ++k) {
                if (entries_[i].rgb == entries_[k].rgb)
                    throw ContractError("classes '" + entries_[i].name + "' and '" + entries_[k].name +
                                        "' share a color");
                if (entries_[i].id == entries_[k].id)
                    throw ContractError("classes '" + entries_[i].name + "' and '" + entries_[k].name +
                                        "' share an id");
            }
        }
    }

    std::vector<ColorEntry> entries_;
};

struct SparseLabelImage {
    std::string image_id;
    analytics::SegMask labels; ///< 255 where nothing was painted
    ColorTable colors;

    [[nodiscard]] double unlabeled_fraction() const {
        std::size_t n = 0;
        for (auto c : labels.classes)
            n += c == analytics::kUnlabeled;
        return labels.classes.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(labels.classes.size());
    }
};

/// Off-palette pixels found in a label layer, typically anti-aliased brush edges.
class LabelColorError : public ParseError {
public:
    struct Offender {
        int x, y;
        Rgb rgb;
    };

    explicit LabelColorError(std::vector<Offender> offenders)
        : ParseError(describe(offenders)), offenders_(std::move(offenders)) {}

    [[nodiscard]] const std::vector<Offender>& offenders() const { return offenders_; }

private:
    static std::string describe(const std::vector<Offender>& o) {
        std::ostringstream s;
        s << o.size() << " pixel(s) use colors outside the table:";
        for (std::size_t i = 0; i < o.size() && i < 10; ++i)
            s << " (" << o[i].x << "," << o[i].y << ")=#" << std::hex << (int(o[i].rgb[0]) << 16 | int(o[i].rgb[1]) << 8 | o[i].rgb[2])
              << std::dec;
        if (o.size() > 10)
            s << " ...";
        return s.str();
    }

    std::vector<Offender> offenders_;
};

/// Converts a painted RGB layer into class labels by exact colour match.
[[nodiscard]] inline SparseLabelImage parse_sparse_labels(const analytics::Image& layer, const ColorTable& table,
                                                          std::string image_id = {}, int expect_width = 0,
                                                          int expect_height = 0) {
    if (layer.channels != 3)
        throw ContractError("label layer must be RGB");
    if ((expect_width && layer.width != expect_width) || (expect_height && layer.height != expect_height))
        throw ContractError("label layer size does not match the image");
    SparseLabelImage out{std::move(image_id), analytics::SegMask(layer.width, layer.height, analytics::kUnlabeled),
                         table};
    std::vector<LabelColorError::Offender> bad;
    for (int y = 0; y < layer.height; ++y)
        for (int x = 0; x < layer.width; ++x) {
            const Rgb c{layer.at(x, y, 0), layer.at(x, y, 1), layer.at(x, y, 2)};
            if (c == Rgb{0, 0, 0})
                continue;
            if (const auto id = table.lookup(c))
                out.labels.at(x, y) = *id;
            else
                bad.push_back({x, y, c});
        }
    if (!bad.empty())
        throw LabelColorError(std::move(bad));
    return out;
}

} // namespace adapt::annotate
