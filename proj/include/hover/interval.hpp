#pragma once

#include <algorithm>
#include <vector>

namespace hover {

struct Interval {
    double lo = 0.0;
    double hi = -1.0;  // default is empty

    bool empty() const { return !(lo <= hi); }
    double length() const { return empty() ? 0.0 : hi - lo; }
    bool contains(double x) const { return !empty() && x >= lo && x <= hi; }

    static Interval none() { return {}; }
};

inline Interval intersect(const Interval& a, const Interval& b)
{
    if (a.empty() || b.empty()) return Interval::none();
    Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
    return r.empty() ? Interval::none() : r;
}

/** @brief Sorted union of disjoint closed intervals. */
class IntervalUnion {
public:
    IntervalUnion() = default;
    explicit IntervalUnion(std::vector<Interval> parts) { assign(std::move(parts)); }
    IntervalUnion(std::initializer_list<Interval> parts) { assign(std::vector<Interval>(parts)); }

    const std::vector<Interval>& parts() const { return parts_; }
    bool empty() const { return parts_.empty(); }
    std::size_t size() const { return parts_.size(); }

    double total_length() const
    {
        double s = 0.0;
        for (const auto& p : parts_) s += p.length();
        return s;
    }

    bool contains(double x) const
    {
        return std::any_of(parts_.begin(), parts_.end(), [x](const Interval& p) { return p.contains(x); });
    }

    std::vector<double> endpoints() const
    {
        std::vector<double> out;
        for (const auto& p : parts_) {
            out.push_back(p.lo);
            out.push_back(p.hi);
        }
        return out;
    }

    IntervalUnion intersect(const Interval& iv) const
    {
        std::vector<Interval> out;
        for (const auto& p : parts_) {
            Interval q = hover::intersect(p, iv);
            if (!q.empty()) out.push_back(q);
        }
        return IntervalUnion(std::move(out));
    }

    IntervalUnion intersect(const IntervalUnion& other) const
    {
        std::vector<Interval> out;
        for (const auto& a : parts_)
            for (const auto& b : other.parts_) {
                Interval q = hover::intersect(a, b);
                if (!q.empty()) out.push_back(q);
            }
        return IntervalUnion(std::move(out));
    }

    bool operator==(const IntervalUnion& o) const
    {
        if (parts_.size() != o.parts_.size()) return false;
        for (std::size_t k = 0; k < parts_.size(); ++k)
            if (parts_[k].lo != o.parts_[k].lo || parts_[k].hi != o.parts_[k].hi) return false;
        return true;
    }

private:
    void assign(std::vector<Interval> parts)
    {
        parts.erase(std::remove_if(parts.begin(), parts.end(), [](const Interval& p) { return p.empty(); }),
                    parts.end());
        std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (const auto& p : parts) {
            if (!parts_.empty() && p.lo <= parts_.back().hi)
                parts_.back().hi = std::max(parts_.back().hi, p.hi);
            else
                parts_.push_back(p);
        }
    }

    std::vector<Interval> parts_;
};

}  // namespace hover
