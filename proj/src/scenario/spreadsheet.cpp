#include "docflow/scenario/spreadsheet.hpp"

#include "docflow/common/text.hpp"

#include <zlib.h>

#include <cstdint>

namespace docflow::scenario {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default:
        if (u < 0x20 && c != '\t' && c != '\n' && c != '\r') break;  // not representable in XML 1.0
        out += c;
    }
  }
  return out;
}

std::string column_letter(std::size_t col) { return std::string(1, static_cast<char>('A' + col)); }

std::string inline_cell(std::size_t row, std::size_t col, const std::string& value) {
  return "<c r=\"" + column_letter(col) + std::to_string(row) + "\" t=\"inlineStr\"><is><t xml:space=\"preserve\">" +
         xml_escape(value) + "</t></is></c>";
}

std::string number_cell(std::size_t row, std::size_t col, const std::string& value) {
  return "<c r=\"" + column_letter(col) + std::to_string(row) + "\"><v>" + value + "</v></c>";
}

bool all_digits(const std::string& s) {
  return !s.empty() && s.size() < 10 && s.find_first_not_of("0123456789") == std::string::npos;
}

class ZipWriter {
 public:
  void add(const std::string& name, const std::string& data) {
    auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
    auto offset = static_cast<std::uint32_t>(out_.size());

    u32(out_, 0x04034b50);
    u16(out_, 20);
    u16(out_, 0x0800);  // UTF-8 names
    u16(out_, 0);       // stored
    u16(out_, 0);       // 00:00:00
    u16(out_, 0x0021);  // 1980-01-01
    u32(out_, crc);
    u32(out_, static_cast<std::uint32_t>(data.size()));
    u32(out_, static_cast<std::uint32_t>(data.size()));
    u16(out_, static_cast<std::uint16_t>(name.size()));
    u16(out_, 0);
    out_ += name;
    out_ += data;

    u32(central_, 0x02014b50);
    u16(central_, 20);
    u16(central_, 20);
    u16(central_, 0x0800);
    u16(central_, 0);
    u16(central_, 0);
    u16(central_, 0x0021);
    u32(central_, crc);
    u32(central_, static_cast<std::uint32_t>(data.size()));
    u32(central_, static_cast<std::uint32_t>(data.size()));
    u16(central_, static_cast<std::uint16_t>(name.size()));
    u16(central_, 0);
    u16(central_, 0);
    u16(central_, 0);
    u16(central_, 0);
    u32(central_, 0);
    u32(central_, offset);
    central_ += name;
    ++entries_;
  }

  std::string finish() {
    std::string out = out_;
    auto cd_offset = static_cast<std::uint32_t>(out.size());
    out += central_;
    u32(out, 0x06054b50);
    u16(out, 0);
    u16(out, 0);
    u16(out, entries_);
    u16(out, entries_);
    u32(out, static_cast<std::uint32_t>(central_.size()));
    u32(out, cd_offset);
    u16(out, 0);
    return out;
  }

 private:
  static void u16(std::string& s, std::uint16_t v) {
    s += static_cast<char>(v & 0xff);
    s += static_cast<char>((v >> 8) & 0xff);
  }
  static void u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
  }

  std::string out_;
  std::string central_;
  std::uint16_t entries_ = 0;
};

constexpr const char* kXmlDecl = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";
constexpr const char* kMainNs = "http://schemas.openxmlformats.org/spreadsheetml/2006/main";
constexpr const char* kRelNs = "http://schemas.openxmlformats.org/package/2006/relationships";
constexpr const char* kDocRelNs = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";

}  // namespace

SpreadsheetModel build_spreadsheet(const TestScenario& scenario) {
  scenario.validate();
  SpreadsheetModel m;
  m.header_block = {
      {"Test scenario", scenario.title},
      {"Source section", scenario.source_section},
      {"Language", scenario.language},
      {"Preconditions", text::join(scenario.preconditions, "; ")},
  };
  for (const auto& s : scenario.steps) m.rows.push_back({std::to_string(s.step_no), s.action, s.expected_result});
  return m;
}

std::string to_csv(const SpreadsheetModel& sheet) {
  std::string out;
  for (const auto& [label, value] : sheet.header_block) out += csv_field(label) + "," + csv_field(value) + "\r\n";
  out += csv_field(sheet.columns[0]) + "," + csv_field(sheet.columns[1]) + "," + csv_field(sheet.columns[2]) + "\r\n";
  for (const auto& r : sheet.rows) out += csv_field(r[0]) + "," + csv_field(r[1]) + "," + csv_field(r[2]) + "\r\n";
  return out;
}

std::string to_xlsx(const SpreadsheetModel& sheet) {
  std::string rows;
  std::size_t r = 0;
  for (const auto& [label, value] : sheet.header_block) {
    ++r;
    rows += "<row r=\"" + std::to_string(r) + "\">" + inline_cell(r, 0, label) + inline_cell(r, 1, value) + "</row>";
  }
  ++r;
  rows += "<row r=\"" + std::to_string(r) + "\">";
  for (std::size_t c = 0; c < 3; ++c) rows += inline_cell(r, c, sheet.columns[c]);
  rows += "</row>";
  for (const auto& row : sheet.rows) {
    ++r;
    rows += "<row r=\"" + std::to_string(r) + "\">";
    rows += all_digits(row[0]) ? number_cell(r, 0, row[0]) : inline_cell(r, 0, row[0]);
    rows += inline_cell(r, 1, row[1]) + inline_cell(r, 2, row[2]) + "</row>";
  }

  std::string content_types =
      std::string(kXmlDecl) +
      "<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">"
      "<Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>"
      "<Default Extension=\"xml\" ContentType=\"application/xml\"/>"
      "<Override PartName=\"/xl/workbook.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>"
      "<Override PartName=\"/xl/worksheets/sheet1.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>"
      "</Types>";
  std::string root_rels = std::string(kXmlDecl) + "<Relationships xmlns=\"" + kRelNs +
                          "\"><Relationship Id=\"rId1\" Type=\"" + kDocRelNs +
                          "/officeDocument\" Target=\"xl/workbook.xml\"/></Relationships>";
  std::string workbook = std::string(kXmlDecl) + "<workbook xmlns=\"" + kMainNs + "\" xmlns:r=\"" + kDocRelNs +
                         "\"><sheets><sheet name=\"Scenario\" sheetId=\"1\" r:id=\"rId1\"/></sheets></workbook>";
  std::string workbook_rels = std::string(kXmlDecl) + "<Relationships xmlns=\"" + kRelNs +
                              "\"><Relationship Id=\"rId1\" Type=\"" + kDocRelNs +
                              "/worksheet\" Target=\"worksheets/sheet1.xml\"/></Relationships>";
  std::string worksheet =
      std::string(kXmlDecl) + "<worksheet xmlns=\"" + kMainNs + "\"><sheetData>" + rows + "</sheetData></worksheet>";

  ZipWriter zip;
  zip.add("[Content_Types].xml", content_types);
  zip.add("_rels/.rels", root_rels);
  zip.add("xl/workbook.xml", workbook);
  zip.add("xl/_rels/workbook.xml.rels", workbook_rels);
  zip.add("xl/worksheets/sheet1.xml", worksheet);
  return zip.finish();
}

}  // namespace docflow::scenario
