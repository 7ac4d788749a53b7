// Chip geometry and charge response shared by the simulator and the statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qimpact/error.hpp"

namespace qimpact {

using QubitId = int;

struct Position {
    double x_mm = 0.0;
    double y_mm = 0.0;

    friend bool operator==(Position, Position) = default;
};

inline double distance(Position a, Position b) {
    return std::hypot(a.x_mm - b.x_mm, a.y_mm - b.y_mm);
}

struct Qubit {
    QubitId id = 0;
    Position pos;
    bool active = true;
};

struct BoundingBox {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    double area() const { return (x_max - x_min) * (y_max - y_min); }
};

/// Qubit positions on the chip plane. Only `active` qubits take part in jump
/// detection; idle qubits are kept so distances and plots stay faithful to
/// the physical device.
class ChipLayout {
public:
    ChipLayout() = default;

    explicit ChipLayout(std::vector<Qubit> qubits) : qubits_(std::move(qubits)) {
        for (std::size_t i = 0; i < qubits_.size(); ++i) {
            const auto& q = qubits_[i];
            if (!std::isfinite(q.pos.x_mm) || !std::isfinite(q.pos.y_mm))
                throw Error(Errc::invalid_argument,
                            "qubit " + std::to_string(q.id) + " has non-finite coordinates");
            if (!index_.emplace(q.id, i).second)
                throw Error(Errc::invalid_argument,
                            "duplicate qubit id " + std::to_string(q.id));
        }
    }

    const std::vector<Qubit>& qubits() const { return qubits_; }
    std::size_t size() const { return qubits_.size(); }
    bool contains(QubitId id) const { return index_.count(id) != 0; }

    const Qubit& qubit(QubitId id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw Error(Errc::invalid_argument, "unknown qubit id " + std::to_string(id));
        return qubits_[it->second];
    }

    Position position(QubitId id) const { return qubit(id).pos; }

    std::vector<QubitId> active_ids() const {
        std::vector<QubitId> ids;
        for (const auto& q : qubits_)
            if (q.active) ids.push_back(q.id);
        return ids;
    }

    BoundingBox bounding_box() const {
        if (qubits_.empty()) return {};
        BoundingBox b{qubits_[0].pos.x_mm, qubits_[0].pos.x_mm, qubits_[0].pos.y_mm,
                      qubits_[0].pos.y_mm};
        for (const auto& q : qubits_) {
            b.x_min = std::min(b.x_min, q.pos.x_mm);
            b.x_max = std::max(b.x_max, q.pos.x_mm);
            b.y_min = std::min(b.y_min, q.pos.y_mm);
            b.y_max = std::max(b.y_max, q.pos.y_mm);
        }
        return b;
    }

private:
    std::vector<Qubit> qubits_;
    std::unordered_map<QubitId, std::size_t> index_;
};

/// Euclidean distance between two qubits of the layout, in millimeters.
inline double distance(const ChipLayout& layout, QubitId a, QubitId b) {
    return distance(layout.position(a), layout.position(b));
}

struct ImpactEvent {
    double time = 0.0;         // seconds since run start
    Position pos;              // epicenter
    double peak_charge = 0.0;  // offset-charge change at the epicenter
    double t1_epicenter = 0.0; // transient T1 at the epicenter, seconds

    friend bool operator==(const ImpactEvent&, const ImpactEvent&) = default;
};

/// Offset charge reduced to its representative in [0, 1).
class OffsetCharge {
public:
    OffsetCharge() = default;
    double value() const { return value_; }
    friend bool operator==(OffsetCharge, OffsetCharge) = default;

private:
    explicit OffsetCharge(double v) : value_(v) {}
    double value_ = 0.0;
    friend OffsetCharge wrap_charge(double value);
};

inline OffsetCharge wrap_charge(double value) {
    if (!std::isfinite(value))
        throw Error(Errc::invalid_argument, "offset charge must be finite");
    double r = value - std::floor(value);
    // floor() can leave r == 1.0 for tiny negative inputs.
    if (r >= 1.0) r = 0.0;
    return OffsetCharge(r);
}

/// Gaussian falloff of the offset-charge change with distance from the epicenter.
inline double charge_response(const ImpactEvent& event, Position qubit_pos, double sigma_mm) {
    if (!(sigma_mm > 0.0)) throw Error(Errc::invalid_argument, "sigma must be positive");
    const double d = distance(event.pos, qubit_pos);
    return event.peak_charge * std::exp(-d * d / (2.0 * sigma_mm * sigma_mm));
}

/// Reads a layout CSV with header `qubit_id,x_mm,y_mm,active`.
inline ChipLayout read_layout(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::parse_error, "layout: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "qubit_id,x_mm,y_mm,active")
        throw Error(Errc::schema_error, "layout: expected header qubit_id,x_mm,y_mm,active");
    std::vector<Qubit> qubits;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f[4];
        for (auto& field : f)
            if (!std::getline(ss, field, ','))
                throw Error(Errc::parse_error, "layout: row " + std::to_string(row) +
                                                   " has fewer than 4 fields");
        try {
            Qubit q;
            q.id = std::stoi(f[0]);
            q.pos = {std::stod(f[1]), std::stod(f[2])};
            if (f[3] != "0" && f[3] != "1")
                throw Error(Errc::parse_error,
                            "layout: row " + std::to_string(row) + " active must be 0 or 1");
            q.active = f[3] == "1";
            qubits.push_back(q);
        } catch (const std::logic_error&) {
            throw Error(Errc::parse_error, "layout: row " + std::to_string(row) + " is malformed");
        }
    }
    return ChipLayout(std::move(qubits));
}

inline ChipLayout read_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_failure, "cannot open layout " + path);
    return read_layout(in);
}

inline void write_layout(std::ostream& out, const ChipLayout& layout) {
    out << "qubit_id,x_mm,y_mm,active\n";
    out.precision(17);
    for (const auto& q : layout.qubits())
        out << q.id << ',' << q.pos.x_mm << ',' << q.pos.y_mm << ',' << (q.active ? 1 : 0) << '\n';
}

} // namespace qimpact
