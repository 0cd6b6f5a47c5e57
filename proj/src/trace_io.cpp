#include "ccotdr/trace_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace ccotdr {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    auto bits = std::bit_cast<U>(value);
    std::array<char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
T get_le(const unsigned char* p) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
    return std::bit_cast<T>(bits);
}

std::string offset_text(std::uint64_t offset) { return "byte offset " + std::to_string(offset); }

std::string fmt_double(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

std::string fmt_float(float v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

template <typename T>
T parse_number(std::string_view text, std::size_t line) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw FormatError("csv line " + std::to_string(line) + ": bad number '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

int polarizations_of(RecordKind kind) { return kind == RecordKind::profile_single ? 1 : 2; }

TraceRecord to_record(const Shot& shot, double group_index) {
    TraceRecord r;
    r.kind = RecordKind::raw_shot;
    r.sample_rate = shot.sample_rate;
    r.position_step = position_axis(1.0, shot.sample_rate, group_index);
    r.origin = 0.0;
    r.samples.resize(shot.iq_x.size(), 2);
    r.samples.col(0) = shot.iq_x;
    r.samples.col(1) = shot.iq_y;
    return r;
}

TraceRecord to_record(const CompressedProfile& profile, double sample_rate) {
    TraceRecord r;
    r.kind = profile.polarizations() == 1 ? RecordKind::profile_single : RecordKind::profile;
    r.sample_rate = sample_rate;
    r.position_step = profile.position_step;
    r.origin = profile.origin;
    r.samples = profile.samples;
    return r;
}

CompressedProfile to_profile(const TraceRecord& record, double timestamp) {
    CompressedProfile p;
    p.samples = record.samples;
    p.position_step = record.position_step;
    p.origin = record.origin;
    p.timestamp = timestamp;
    return p;
}

void write_trace(std::ostream& out, const TraceRecord& record) {
    if (record.samples.cols() != polarizations_of(record.kind)) {
        throw FormatError("write_trace: polarization count does not match record kind");
    }
    out.write(kTraceMagic, 4);
    put_le<std::uint16_t>(out, kTraceVersion);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(record.kind));
    put_le<double>(out, record.sample_rate);
    put_le<double>(out, record.position_step);
    put_le<double>(out, record.origin);
    put_le<std::uint64_t>(out, record.count());
    for (Eigen::Index p = 0; p < record.samples.cols(); ++p) {
        for (Eigen::Index i = 0; i < record.samples.rows(); ++i) {
            put_le<float>(out, record.samples(i, p).real());
            put_le<float>(out, record.samples(i, p).imag());
        }
    }
    if (!out) throw FormatError("write_trace: stream write failed");
}

TraceReader::TraceReader(std::istream& in) : in_(in) {}

std::optional<TraceRecord> TraceReader::next() {
    std::array<unsigned char, kTraceHeaderBytes> header{};
    in_.read(reinterpret_cast<char*>(header.data()), static_cast<std::streamsize>(header.size()));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got == 0) return std::nullopt;
    const std::uint64_t start = offset_;
    if (got < header.size()) {
        throw FormatError("truncated header at " + offset_text(start) + ": expected " +
                          std::to_string(kTraceHeaderBytes) + " bytes, found " + std::to_string(got));
    }
    if (std::memcmp(header.data(), kTraceMagic, 4) != 0) {
        throw FormatError("bad magic at " + offset_text(start));
    }
    const auto version = get_le<std::uint16_t>(header.data() + 4);
    if (version != kTraceVersion) {
        throw FormatError("unsupported version " + std::to_string(version) + " at " +
                          offset_text(start + 4));
    }
    const auto kind_raw = get_le<std::uint16_t>(header.data() + 6);
    if (kind_raw < 1 || kind_raw > 3) {
        throw FormatError("unknown record kind " + std::to_string(kind_raw) + " at " +
                          offset_text(start + 6));
    }
    TraceRecord r;
    r.kind = static_cast<RecordKind>(kind_raw);
    r.sample_rate = get_le<double>(header.data() + 8);
    r.position_step = get_le<double>(header.data() + 16);
    r.origin = get_le<double>(header.data() + 24);
    const auto count = get_le<std::uint64_t>(header.data() + 32);
    const int pols = polarizations_of(r.kind);
    offset_ += kTraceHeaderBytes;

    constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 34;
    if (count > kMaxCount) {
        throw FormatError("implausible sample count " + std::to_string(count) + " at " +
                          offset_text(start + 32));
    }
    const std::uint64_t payload = count * 8u * static_cast<std::uint64_t>(pols);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(payload));
    in_.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(payload));
    const auto have = static_cast<std::uint64_t>(in_.gcount());
    if (have < payload) {
        throw FormatError("truncated payload at " + offset_text(offset_) + ": expected " +
                          std::to_string(payload) + " bytes, found " + std::to_string(have));
    }
    r.samples.resize(static_cast<Eigen::Index>(count), pols);
    const unsigned char* p = bytes.data();
    for (Eigen::Index c = 0; c < pols; ++c) {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(count); ++i) {
            r.samples(i, c) = cfloat(get_le<float>(p), get_le<float>(p + 4));
            p += 8;
        }
    }
    offset_ += payload;
    return r;
}

std::vector<TraceRecord> read_trace(std::istream& in) {
    TraceReader reader(in);
    std::vector<TraceRecord> out;
    while (auto r = reader.next()) out.push_back(std::move(*r));
    return out;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> records) {
    out << "# ccotdr trace csv v1\n";
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        const int pols = polarizations_of(r.kind);
        out << "# record=" << k << " kind=" << static_cast<int>(r.kind)
            << " sample_rate=" << fmt_double(r.sample_rate)
            << " position_step=" << fmt_double(r.position_step) << " origin=" << fmt_double(r.origin)
            << " count=" << r.count() << '\n';
        out << "index,position_m";
        for (int p = 0; p < pols; ++p) {
            const char* name = p == 0 ? "x" : "y";
            out << ',' << name << "_re," << name << "_im";
        }
        out << '\n';
        for (Eigen::Index i = 0; i < r.samples.rows(); ++i) {
            out << i << ',' << fmt_double(r.origin + static_cast<double>(i) * r.position_step);
            for (int p = 0; p < pols; ++p) {
                out << ',' << fmt_float(r.samples(i, p).real()) << ',' << fmt_float(r.samples(i, p).imag());
            }
            out << '\n';
        }
    }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
    std::vector<TraceRecord> out;
    std::string line;
    std::size_t lineno = 0;
    std::uint64_t expected = 0;
    Eigen::Index filled = 0;
    auto finish = [&] {
        if (!out.empty() && static_cast<std::uint64_t>(filled) != expected) {
            throw FormatError("csv record " + std::to_string(out.size() - 1) + ": expected " +
                              std::to_string(expected) + " rows, found " + std::to_string(filled));
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind("# record=", 0) == 0) {
            finish();
            TraceRecord r;
            std::istringstream fields(line.substr(2));
            std::string kv;
            while (fields >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = kv.substr(0, eq);
                const std::string_view val(kv.data() + eq + 1, kv.size() - eq - 1);
                if (key == "kind") {
                    const int kind = parse_number<int>(val, lineno);
                    if (kind < 1 || kind > 3) throw FormatError("csv line " + std::to_string(lineno) + ": bad kind");
                    r.kind = static_cast<RecordKind>(kind);
                } else if (key == "sample_rate") {
                    r.sample_rate = parse_number<double>(val, lineno);
                } else if (key == "position_step") {
                    r.position_step = parse_number<double>(val, lineno);
                } else if (key == "origin") {
                    r.origin = parse_number<double>(val, lineno);
                } else if (key == "count") {
                    expected = parse_number<std::uint64_t>(val, lineno);
                }
            }
            r.samples.resize(static_cast<Eigen::Index>(expected), polarizations_of(r.kind));
            filled = 0;
            out.push_back(std::move(r));
            continue;
        }
        if (line[0] == '#' || line.rfind("index,", 0) == 0) continue;
        if (out.empty()) throw FormatError("csv line " + std::to_string(lineno) + ": data before record header");
        auto& r = out.back();
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            cols.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        const int pols = polarizations_of(r.kind);
        if (cols.size() != static_cast<std::size_t>(2 + 2 * pols)) {
            throw FormatError("csv line " + std::to_string(lineno) + ": expected " +
                              std::to_string(2 + 2 * pols) + " columns");
        }
        const auto idx = parse_number<std::int64_t>(cols[0], lineno);
        if (idx != filled || filled >= r.samples.rows()) {
            throw FormatError("csv line " + std::to_string(lineno) + ": unexpected row index");
        }
        for (int p = 0; p < pols; ++p) {
            r.samples(filled, p) = cfloat(parse_number<float>(cols[2 + 2 * p], lineno),
                                          parse_number<float>(cols[3 + 2 * p], lineno));
        }
        ++filled;
    }
    finish();
    return out;
}

}  // namespace ccotdr
