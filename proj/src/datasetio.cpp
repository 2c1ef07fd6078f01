#include "sramage/datasetio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sramage/rng.hpp"

namespace fs = std::filesystem;

namespace sramage {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const char* what) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw FormatError(std::string(what) + ": trailing characters");
        return v;
    } catch (const std::exception&) {
        throw FormatError(std::string(what) + ": not a number: " + s);
    }
}

}

double DeviceManifest::max_usage_months() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.usage_months);
    return m;
}

void DeviceManifest::validate() const {
    std::set<std::string> ids;
    for (const auto& e : entries) {
        if (e.device_id.empty()) throw FormatError("manifest: empty device id");
        if (!ids.insert(e.device_id).second)
            throw DuplicateDeviceError("manifest: duplicate device id: " + e.device_id);
        if (e.usage_months < 0.0)
            throw FormatError("manifest: negative usage for device " + e.device_id);
        if (e.sram_bytes == 0)
            throw FormatError("manifest: zero sram_bytes for device " + e.device_id);
        if (e.sram_bytes != entries.front().sram_bytes)
            throw FormatError("manifest: devices disagree on sram_bytes");
    }
}

DeviceManifest DeviceManifest::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("manifest: cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: invalid JSON: ") + e.what());
    }

    DeviceManifest m;
    m.base_dir = fs::path(path).parent_path().string();
    try {
        if (j.at("format").get<std::string>() != "sramage-manifest")
            throw FormatError("manifest: unexpected document format");
        if (j.at("version").get<int>() != 1) throw FormatError("manifest: unsupported version");
        if (j.contains("bit_order")) {
            const std::string order = j["bit_order"].get<std::string>();
            if (order == "lsb_first")
                m.bit_order = BitOrder::lsb_first;
            else if (order == "msb_first")
                m.bit_order = BitOrder::msb_first;
            else
                throw FormatError("manifest: unknown bit_order: " + order);
        }
        for (const auto& d : j.at("devices")) {
            DeviceEntry e;
            e.device_id = d.at("device_id").get<std::string>();
            e.usage_months = d.at("usage_months").get<double>();
            e.sram_bytes = d.at("sram_bytes").get<size_t>();
            e.dump_paths = d.at("dumps").get<std::vector<std::string>>();
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: missing or mistyped field: ") + e.what());
    }
    m.validate();
    return m;
}

void DeviceManifest::save(const std::string& path, const ReproStanza& repro) const {
    validate();
    nlohmann::json devices = nlohmann::json::array();
    for (const auto& e : entries) {
        devices.push_back({{"device_id", e.device_id},
                           {"usage_months", e.usage_months},
                           {"sram_bytes", e.sram_bytes},
                           {"dumps", e.dump_paths}});
    }
    const nlohmann::json j{{"format", "sramage-manifest"},
                           {"version", 1},
                           {"bit_order", bit_order == BitOrder::lsb_first ? "lsb_first" : "msb_first"},
                           {"repro",
                            {{"seed", repro.seed},
                             {"config", repro.config_hash},
                             {"toolkit_version", repro.toolkit_version}}},
                           {"devices", devices}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("manifest: cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("manifest: write failed: " + path);
}

namespace {

// Reverses the bit order within each byte value; index = byte, value = reversed.
const std::array<uint8_t, 256>& bit_reverse_table() {
    static const std::array<uint8_t, 256> table = [] {
        std::array<uint8_t, 256> t{};
        for (int b = 0; b < 256; ++b) {
            uint8_t r = 0;
            for (int i = 0; i < 8; ++i)
                if (b & (1 << i)) r |= static_cast<uint8_t>(1 << (7 - i));
            t[b] = r;
        }
        return t;
    }();
    return table;
}

void unpack_dump(const std::vector<uint8_t>& bytes, BitOrder order, BitMatrix& bits, size_t row) {
    auto words = bits.row_words(row);
    const auto& rev = bit_reverse_table();
    for (size_t w = 0; w < words.size(); ++w) {
        uint64_t word = 0;
        const size_t base = w * 8;
        const size_t limit = std::min<size_t>(8, bytes.size() - base);
        for (size_t b = 0; b < limit; ++b) {
            const uint8_t byte = order == BitOrder::lsb_first ? bytes[base + b] : rev[bytes[base + b]];
            word |= static_cast<uint64_t>(byte) << (8 * b);
        }
        words[w] = word;
    }
}

}

BitSampleSet load_device(const DeviceManifest& manifest, size_t device_index) {
    if (device_index >= manifest.entries.size())
        throw InvalidArgumentError("load_device: device index out of range");
    const DeviceEntry& entry = manifest.entries[device_index];
    if (entry.dump_paths.empty())
        throw FormatError("load_device: device has no dumps: " + entry.device_id);

    BitSampleSet set;
    set.device_id = entry.device_id;
    set.usage_months = entry.usage_months;
    set.bits = BitMatrix(entry.dump_paths.size(), entry.sram_bytes * 8);

    std::vector<uint8_t> bytes(entry.sram_bytes);
    for (size_t s = 0; s < entry.dump_paths.size(); ++s) {
        fs::path p = fs::path(entry.dump_paths[s]);
        if (p.is_relative() && !manifest.base_dir.empty()) p = fs::path(manifest.base_dir) / p;

        std::ifstream in(p, std::ios::binary);
        if (!in) throw IoError("load_device: cannot open dump: " + p.string());
        in.seekg(0, std::ios::end);
        const auto size = static_cast<size_t>(in.tellg());
        if (size != entry.sram_bytes)
            throw SizeMismatchError("load_device: dump " + p.string() + " is " +
                                    std::to_string(size) + " bytes, expected " +
                                    std::to_string(entry.sram_bytes));
        in.seekg(0, std::ios::beg);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
        if (!in) throw IoError("load_device: read failed: " + p.string());
        unpack_dump(bytes, manifest.bit_order, set.bits, s);
    }
    set.validate();
    return set;
}

std::vector<BitSampleSet> ingest(const DeviceManifest& manifest) {
    manifest.validate();
    std::vector<BitSampleSet> out;
    out.reserve(manifest.entries.size());
    for (size_t i = 0; i < manifest.entries.size(); ++i) out.push_back(load_device(manifest, i));
    return out;
}

std::vector<BitSampleSet> ingest(const std::string& manifest_path) {
    return ingest(DeviceManifest::load(manifest_path));
}

void for_each_device(const DeviceManifest& manifest,
                     const std::function<void(const BitSampleSet&)>& fn) {
    manifest.validate();
    for (size_t i = 0; i < manifest.entries.size(); ++i) fn(load_device(manifest, i));
}

SplitAssignment SplitAssignment::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("split: cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("split: invalid JSON: ") + e.what());
    }
    SplitAssignment s;
    try {
        if (j.at("format").get<std::string>() != "sramage-split")
            throw FormatError("split: unexpected document format");
        if (j.at("version").get<int>() != 1) throw FormatError("split: unsupported version");
        s.seed = j.at("seed").get<uint64_t>();
        s.train_fraction = j.at("train_fraction").get<double>();
        s.bin_months = j.at("bin_months").get<double>();
        for (const auto& d : j.at("train_devices")) s.train_devices.insert(d.get<std::string>());
        for (const auto& d : j.at("test_devices")) s.test_devices.insert(d.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("split: missing or mistyped field: ") + e.what());
    }
    for (const auto& id : s.train_devices)
        if (s.test_devices.count(id))
            throw FormatError("split: device in both train and test: " + id);
    return s;
}

void SplitAssignment::save(const std::string& path, const ReproStanza& repro) const {
    const nlohmann::json j{
        {"format", "sramage-split"},
        {"version", 1},
        {"seed", seed},
        {"train_fraction", train_fraction},
        {"bin_months", bin_months},
        {"repro",
         {{"seed", repro.seed}, {"config", repro.config_hash}, {"toolkit_version", repro.toolkit_version}}},
        {"train_devices", train_devices},
        {"test_devices", test_devices}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("split: cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("split: write failed: " + path);
}

SplitAssignment stratified_device_split(const DeviceManifest& manifest, double train_fraction,
                                        double bin_months, uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidArgumentError("stratified_device_split: train_fraction must be in (0,1)");
    if (bin_months <= 0.0)
        throw InvalidArgumentError("stratified_device_split: bin_months must be positive");
    manifest.validate();

    // Bucket devices by usage bin, keeping manifest order inside each bucket.
    std::map<int64_t, std::vector<size_t>> buckets;
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        const int64_t bin =
            static_cast<int64_t>(std::floor(manifest.entries[i].usage_months / bin_months));
        buckets[bin].push_back(i);
    }

    const size_t total = manifest.entries.size();
    const size_t global_train =
        static_cast<size_t>(std::floor(train_fraction * static_cast<double>(total) + 1e-9));

    // Largest-remainder rounding of per-bucket train counts.
    struct BucketQuota {
        int64_t bin;
        size_t base;
        double remainder;
    };
    std::vector<BucketQuota> quotas;
    size_t base_sum = 0;
    for (const auto& [bin, devices] : buckets) {
        const double quota = train_fraction * static_cast<double>(devices.size());
        const size_t base = static_cast<size_t>(std::floor(quota + 1e-9));
        quotas.push_back({bin, base, quota - static_cast<double>(base)});
        base_sum += base;
    }
    size_t leftover = global_train >= base_sum ? global_train - base_sum : 0;
    std::vector<size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (quotas[a].remainder != quotas[b].remainder)
            return quotas[a].remainder > quotas[b].remainder;
        return quotas[a].bin < quotas[b].bin;
    });
    std::map<int64_t, size_t> train_count;
    for (const auto& q : quotas) train_count[q.bin] = q.base;
    for (size_t i = 0; i < order.size() && leftover > 0; ++i) {
        const BucketQuota& q = quotas[order[i]];
        if (train_count[q.bin] < buckets[q.bin].size()) {
            train_count[q.bin]++;
            leftover--;
        }
    }

    SplitAssignment assignment;
    assignment.seed = seed;
    assignment.train_fraction = train_fraction;
    assignment.bin_months = bin_months;

    Rng rng(Rng::derive(seed, 0x53504C49ULL));  // "SPLI" sub-stream
    for (auto& [bin, devices] : buckets) {
        rng.shuffle(devices);
        const size_t t = train_count[bin];
        for (size_t i = 0; i < devices.size(); ++i) {
            const std::string& id = manifest.entries[devices[i]].device_id;
            if (i < t)
                assignment.train_devices.insert(id);
            else
                assignment.test_devices.insert(id);
        }
    }
    return assignment;
}

UsageDiscretizer::UsageDiscretizer(int resolution_months, double max_usage_months)
    : resolution_months_(resolution_months) {
    if (resolution_months < 1)
        throw InvalidArgumentError("UsageDiscretizer: resolution must be >= 1 month");
    if (max_usage_months < 0.0)
        throw InvalidArgumentError("UsageDiscretizer: negative max usage");
    num_classes_ = std::max(
        1, static_cast<int>(std::ceil(max_usage_months / static_cast<double>(resolution_months) -
                                      1e-12)));
}

int UsageDiscretizer::class_of(double usage_months) const {
    if (usage_months < 0.0) throw InvalidArgumentError("UsageDiscretizer: negative usage");
    const int raw =
        static_cast<int>(std::floor(usage_months / static_cast<double>(resolution_months_)));
    return std::min(raw, num_classes_ - 1);
}

std::vector<size_t> LabeledDataset::train_indices() const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < split.size(); ++i)
        if (split[i] == SplitTag::train) idx.push_back(i);
    return idx;
}

std::vector<size_t> LabeledDataset::test_indices() const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < split.size(); ++i)
        if (split[i] == SplitTag::test) idx.push_back(i);
    return idx;
}

LabeledDataset LabeledDataset::take_rows(std::span<const size_t> indices) const {
    LabeledDataset out;
    out.feature_names = feature_names;
    out.X = X.take_rows(indices);
    out.usage.reserve(indices.size());
    out.device_ids.reserve(indices.size());
    out.split.reserve(indices.size());
    for (size_t i : indices) {
        out.usage.push_back(usage[i]);
        out.device_ids.push_back(device_ids[i]);
        out.split.push_back(split[i]);
    }
    return out;
}

void LabeledDataset::validate() const {
    if (X.cols() != feature_names.size())
        throw FormatError("dataset: column count does not match feature names");
    if (usage.size() != X.rows() || device_ids.size() != X.rows() || split.size() != X.rows())
        throw FormatError("dataset: row metadata length mismatch");
}

void LabeledDataset::save_csv(const std::string& path, const ReproStanza& repro) const {
    validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("dataset: cannot open for writing: " + path);
    out << repro.comment_line() << "\n";
    for (const auto& name : feature_names) out << name << ",";
    out << "device_id,usage_months,split\n";
    for (size_t r = 0; r < X.rows(); ++r) {
        if (device_ids[r].find_first_of(",\n") != std::string::npos)
            throw FormatError("dataset: device id contains a delimiter: " + device_ids[r]);
        for (size_t c = 0; c < X.cols(); ++c) out << format_double(X.at(r, c)) << ",";
        out << device_ids[r] << "," << format_double(usage[r]) << ","
            << (split[r] == SplitTag::train ? "train" : "test") << "\n";
    }
    if (!out) throw IoError("dataset: write failed: " + path);
}

LabeledDataset LabeledDataset::load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("dataset: cannot open: " + path);

    auto split_line = [](const std::string& line) {
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.push_back("");
        return fields;
    };

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        header = split_line(line);
        break;
    }
    if (header.size() < 4) throw FormatError("dataset: missing or short header row");
    if (header[header.size() - 3] != "device_id" || header[header.size() - 2] != "usage_months" ||
        header[header.size() - 1] != "split")
        throw FormatError("dataset: header must end with device_id,usage_months,split");

    LabeledDataset ds;
    ds.feature_names.assign(header.begin(), header.end() - 3);
    const size_t ncols = ds.feature_names.size();

    std::vector<double> values;
    size_t nrows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_line(line);
        if (fields.size() != ncols + 3)
            throw FormatError("dataset: row has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(ncols + 3));
        for (size_t c = 0; c < ncols; ++c)
            values.push_back(parse_double(fields[c], "dataset feature"));
        ds.device_ids.push_back(fields[ncols]);
        ds.usage.push_back(parse_double(fields[ncols + 1], "dataset usage"));
        const std::string& tag = fields[ncols + 2];
        if (tag == "train")
            ds.split.push_back(SplitTag::train);
        else if (tag == "test")
            ds.split.push_back(SplitTag::test);
        else
            throw FormatError("dataset: unknown split tag: " + tag);
        ++nrows;
    }
    ds.X = Matrix(nrows, ncols, std::move(values));
    ds.validate();
    return ds;
}

}
