#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>

namespace nlar {

struct MetricsRow {
    std::optional<double> msd;
    std::optional<double> mspe;
    std::optional<double> cvr;
    std::optional<double> len;
    std::size_t n_effective = 0;

    bool operator==(const MetricsRow&) const = default;
};

/// Experiment metrics keyed by (method, horizon), iterated in key order.
class MetricsTable {
public:
    using Key = std::pair<std::string, int>;

    MetricsRow& at(const std::string& method, int horizon) { return rows_[{method, horizon}]; }
    const MetricsRow* find(const std::string& method, int horizon) const;
    const std::map<Key, MetricsRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }
    std::size_t size() const { return rows_.size(); }

    bool operator==(const MetricsTable&) const = default;

private:
    std::map<Key, MetricsRow> rows_;
};

/// CSV text: header method,horizon,msd,mspe,cvr,len,n_effective, values with
/// six decimals, blank cells for missing metrics.
std::string format_table(const MetricsTable& table);
MetricsTable parse_table(const std::string& csv);

void export_table(const MetricsTable& table, const std::string& path);
MetricsTable read_table(const std::string& path);

}  // namespace nlar
