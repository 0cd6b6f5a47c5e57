#pragma once

#include "ccotdr/common.hpp"
#include "ccotdr/compress.hpp"
#include "ccotdr/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ccotdr {

// Binary trace record, all fields little-endian:
//   char[4]  magic "CCOT"
//   u16      format version (1)
//   u16      record kind
//   f64      sample_rate (Hz)
//   f64      position_step (m)
//   f64      origin (m)
//   u64      count (samples per polarization)
// followed by count (re, im) f32 pairs per polarization, polarizations
// concatenated. A file may hold several records back to back.
inline constexpr char kTraceMagic[4] = {'C', 'C', 'O', 'T'};
inline constexpr std::uint16_t kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderBytes = 40;

enum class RecordKind : std::uint16_t {
    raw_shot = 1,        // two polarizations, time samples
    profile = 2,         // two polarizations, compressed
    profile_single = 3,  // one polarization, compressed
};

int polarizations_of(RecordKind kind);

struct TraceRecord {
    RecordKind kind = RecordKind::profile;
    double sample_rate = 0.0;
    double position_step = 0.0;
    double origin = 0.0;
    ComplexMatrix<float> samples;  // count x polarizations

    std::uint64_t count() const { return static_cast<std::uint64_t>(samples.rows()); }
    bool operator==(const TraceRecord&) const = default;
};

TraceRecord to_record(const Shot& shot, double group_index);
TraceRecord to_record(const CompressedProfile& profile, double sample_rate);
CompressedProfile to_profile(const TraceRecord& record, double timestamp);

void write_trace(std::ostream& out, const TraceRecord& record);

// Sequential reader over a record stream. Errors carry the byte offset.
class TraceReader {
public:
    explicit TraceReader(std::istream& in);
    std::optional<TraceRecord> next();
    std::uint64_t offset() const { return offset_; }

private:
    std::istream& in_;
    std::uint64_t offset_ = 0;
};

std::vector<TraceRecord> read_trace(std::istream& in);

// Lossless text dump: per record a metadata comment line, a column header,
// then index, position, and (re, im) per polarization at float32 precision.
void write_trace_csv(std::ostream& out, std::span<const TraceRecord> records);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

}  // namespace ccotdr
