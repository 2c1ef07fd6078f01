#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sramage/bitcore.hpp"
#include "sramage/matrix.hpp"
#include "sramage/repro.hpp"

namespace sramage {

// How a dump byte expands to eight bit addresses. The default maps bit
// address i to byte i/8, bit position i%8, least-significant bit first.
// Published archives with the opposite packing can override per manifest.
enum class BitOrder { lsb_first, msb_first };

struct DeviceEntry {
    std::string device_id;
    double usage_months = 0.0;
    size_t sram_bytes = 0;
    std::vector<std::string> dump_paths;  // relative to the manifest directory
};

struct DeviceManifest {
    std::vector<DeviceEntry> entries;
    BitOrder bit_order = BitOrder::lsb_first;
    std::string base_dir;  // set on load; resolves relative dump paths

    size_t num_devices() const { return entries.size(); }
    size_t sram_bytes() const { return entries.empty() ? 0 : entries.front().sram_bytes; }
    double max_usage_months() const;

    // Unique ids, shared sram_bytes, non-negative usage.
    void validate() const;

    static DeviceManifest load(const std::string& path);
    void save(const std::string& path, const ReproStanza& repro) const;
};

// Reads one device's dumps into a BitSampleSet. Sample order follows the
// manifest's dump order. Distinct errors: IoError (missing file),
// SizeMismatchError (length != sram_bytes).
BitSampleSet load_device(const DeviceManifest& manifest, size_t device_index);

// Loads every device. Prefer for_each_device for large fleets.
std::vector<BitSampleSet> ingest(const DeviceManifest& manifest);
std::vector<BitSampleSet> ingest(const std::string& manifest_path);

// Streams devices one at a time so only a single device is resident.
void for_each_device(const DeviceManifest& manifest,
                     const std::function<void(const BitSampleSet&)>& fn);

struct SplitAssignment {
    std::set<std::string> train_devices;
    std::set<std::string> test_devices;
    uint64_t seed = 0;
    double train_fraction = 0.0;
    double bin_months = 1.0;

    bool is_train(const std::string& device_id) const {
        return train_devices.count(device_id) > 0;
    }

    static SplitAssignment load(const std::string& path);
    void save(const std::string& path, const ReproStanza& repro) const;
};

// Buckets devices by floor(usage / bin_months), shuffles each bucket with a
// seeded generator and splits at train_fraction using largest-remainder
// rounding, so every bucket's train share sits within one device of the
// global ratio. Deterministic for a fixed seed.
SplitAssignment stratified_device_split(const DeviceManifest& manifest, double train_fraction,
                                        double bin_months, uint64_t seed);

// Usage-to-class mapping for one classification resolution. The class count
// comes from the fleet's maximum usage; the maximum-usage device lands in
// the last class.
class UsageDiscretizer {
public:
    UsageDiscretizer(int resolution_months, double max_usage_months);

    int num_classes() const { return num_classes_; }
    int resolution_months() const { return resolution_months_; }

    int class_of(double usage_months) const;

private:
    int resolution_months_;
    int num_classes_;
};

enum class SplitTag { train, test };

// Feature matrix plus labels, device ids and split tags, one row per
// extracted feature vector.
struct LabeledDataset {
    std::vector<std::string> feature_names;
    Matrix X;
    std::vector<double> usage;
    std::vector<std::string> device_ids;
    std::vector<SplitTag> split;

    size_t num_rows() const { return X.rows(); }

    std::vector<size_t> train_indices() const;
    std::vector<size_t> test_indices() const;

    // Rows restricted to the given indices, in order.
    LabeledDataset take_rows(std::span<const size_t> indices) const;

    void validate() const;

    // Delimiter-separated values; header = feature names + device_id +
    // usage_months + split. A leading '#' comment carries the repro stanza.
    void save_csv(const std::string& path, const ReproStanza& repro) const;
    static LabeledDataset load_csv(const std::string& path);
};

}
