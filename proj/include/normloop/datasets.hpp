#pragma once

// The three benchmark schemas. Column content is authored; table and foreign
// key counts follow the published characteristics (4/3, 7/8, 14/21).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "normloop/ddl.hpp"
#include "normloop/schema.hpp"

namespace normloop {

enum class Complexity { Easy, Medium, Hard };

inline std::string to_string(Complexity c) {
  switch (c) {
    case Complexity::Easy: return "Easy";
    case Complexity::Medium: return "Medium";
    case Complexity::Hard: return "Hard";
  }
  return "Easy";
}

namespace dataset_ddl {

inline constexpr std::string_view kOrders = R"sql(-- @schema orders
CREATE TABLE customers (
  customer_id INT,
  name VARCHAR(80),
  email VARCHAR(120),
  city VARCHAR(60),
  PRIMARY KEY (customer_id)
);

CREATE TABLE orders (
  order_id INT,
  customer_id INT,
  order_date DATE,
  status VARCHAR(20),
  PRIMARY KEY (order_id),
  FOREIGN KEY (customer_id) REFERENCES customers (customer_id)
);

CREATE TABLE products (
  product_id INT,
  title VARCHAR(120),
  price DECIMAL(10,2),
  PRIMARY KEY (product_id)
);

CREATE TABLE order_items (
  order_id INT,
  product_id INT,
  quantity INT,
  unit_price DECIMAL(10,2),
  PRIMARY KEY (order_id, product_id),
  FOREIGN KEY (order_id) REFERENCES orders (order_id),
  FOREIGN KEY (product_id) REFERENCES products (product_id)
);
)sql";

// Orders is too small to host five 2NF/3NF anomalies, so injection adds this
// table first.
inline constexpr std::string_view kOrdersSynthetic = R"sql(CREATE TABLE warehouse_stock (
  warehouse_id INT,
  product_id INT,
  stock_level INT,
  restocked_on DATE,
  PRIMARY KEY (warehouse_id, product_id)
);
)sql";

inline constexpr std::string_view kAdvertising = R"sql(-- @schema advertising
CREATE TABLE advertisers (
  advertiser_id INT,
  name VARCHAR(80),
  industry VARCHAR(40),
  PRIMARY KEY (advertiser_id)
);

CREATE TABLE publishers (
  publisher_id INT,
  name VARCHAR(80),
  site_url VARCHAR(120),
  PRIMARY KEY (publisher_id)
);

CREATE TABLE campaigns (
  campaign_id INT,
  advertiser_id INT,
  target_publisher_id INT,
  title VARCHAR(80),
  budget DECIMAL(12,2),
  start_date DATE,
  PRIMARY KEY (campaign_id),
  FOREIGN KEY (advertiser_id) REFERENCES advertisers (advertiser_id),
  FOREIGN KEY (target_publisher_id) REFERENCES publishers (publisher_id)
);

CREATE TABLE ads (
  ad_id INT,
  campaign_id INT,
  headline VARCHAR(120),
  format VARCHAR(20),
  PRIMARY KEY (ad_id),
  FOREIGN KEY (campaign_id) REFERENCES campaigns (campaign_id)
);

CREATE TABLE placements (
  placement_id INT,
  publisher_id INT,
  slot_name VARCHAR(40),
  daily_rate DECIMAL(10,2),
  PRIMARY KEY (placement_id),
  FOREIGN KEY (publisher_id) REFERENCES publishers (publisher_id)
);

CREATE TABLE ad_placements (
  ad_id INT,
  placement_id INT,
  start_date DATE,
  cost DECIMAL(10,2),
  PRIMARY KEY (ad_id, placement_id),
  FOREIGN KEY (ad_id) REFERENCES ads (ad_id),
  FOREIGN KEY (placement_id) REFERENCES placements (placement_id)
);

CREATE TABLE invoices (
  invoice_id INT,
  advertiser_id INT,
  campaign_id INT,
  amount DECIMAL(12,2),
  issued_on DATE,
  PRIMARY KEY (invoice_id),
  FOREIGN KEY (advertiser_id) REFERENCES advertisers (advertiser_id),
  FOREIGN KEY (campaign_id) REFERENCES campaigns (campaign_id)
);
)sql";

inline constexpr std::string_view kAirportDb = R"sql(-- @schema airportdb
CREATE TABLE airport (
  airport_id INT,
  iata VARCHAR(3),
  icao VARCHAR(4),
  name VARCHAR(50),
  PRIMARY KEY (airport_id)
);

CREATE TABLE airport_geo (
  airport_id INT,
  city VARCHAR(50),
  country VARCHAR(50),
  latitude DECIMAL(11,8),
  longitude DECIMAL(11,8),
  PRIMARY KEY (airport_id),
  FOREIGN KEY (airport_id) REFERENCES airport (airport_id)
);

CREATE TABLE airport_reachable (
  airport_id INT,
  hops INT,
  PRIMARY KEY (airport_id),
  FOREIGN KEY (airport_id) REFERENCES airport (airport_id)
);

CREATE TABLE airline (
  airline_id INT,
  iata VARCHAR(2),
  airline_name VARCHAR(30),
  base_airport INT,
  PRIMARY KEY (airline_id),
  FOREIGN KEY (base_airport) REFERENCES airport (airport_id)
);

CREATE TABLE airplane_type (
  type_id INT,
  identifier VARCHAR(50),
  description TEXT,
  PRIMARY KEY (type_id)
);

CREATE TABLE airplane (
  airplane_id INT,
  capacity INT,
  type_id INT,
  airline_id INT,
  PRIMARY KEY (airplane_id),
  FOREIGN KEY (type_id) REFERENCES airplane_type (type_id),
  FOREIGN KEY (airline_id) REFERENCES airline (airline_id)
);

CREATE TABLE flightschedule (
  flightno VARCHAR(8),
  from_airport INT,
  to_airport INT,
  departs_at VARCHAR(5),
  arrives_at VARCHAR(5),
  airline_id INT,
  PRIMARY KEY (flightno),
  FOREIGN KEY (from_airport) REFERENCES airport (airport_id),
  FOREIGN KEY (to_airport) REFERENCES airport (airport_id),
  FOREIGN KEY (airline_id) REFERENCES airline (airline_id)
);

CREATE TABLE flight (
  flight_id INT,
  flightno VARCHAR(8),
  from_airport INT,
  to_airport INT,
  departure TIMESTAMP,
  arrival TIMESTAMP,
  airline_id INT,
  airplane_id INT,
  PRIMARY KEY (flight_id),
  FOREIGN KEY (flightno) REFERENCES flightschedule (flightno),
  FOREIGN KEY (from_airport) REFERENCES airport (airport_id),
  FOREIGN KEY (to_airport) REFERENCES airport (airport_id),
  FOREIGN KEY (airline_id) REFERENCES airline (airline_id),
  FOREIGN KEY (airplane_id) REFERENCES airplane (airplane_id)
);

CREATE TABLE employee (
  employee_id INT,
  firstname VARCHAR(100),
  lastname VARCHAR(100),
  birthdate DATE,
  department VARCHAR(20),
  work_airport INT,
  PRIMARY KEY (employee_id),
  FOREIGN KEY (work_airport) REFERENCES airport (airport_id)
);

CREATE TABLE flight_log (
  flight_id INT,
  logged_at TIMESTAMP,
  employee_id INT,
  old_from_airport INT,
  old_to_airport INT,
  comment TEXT,
  PRIMARY KEY (flight_id, logged_at),
  FOREIGN KEY (flight_id) REFERENCES flight (flight_id),
  FOREIGN KEY (employee_id) REFERENCES employee (employee_id),
  FOREIGN KEY (old_from_airport) REFERENCES airport (airport_id),
  FOREIGN KEY (old_to_airport) REFERENCES airport (airport_id)
);

CREATE TABLE passenger (
  passenger_id INT,
  passportno VARCHAR(9),
  firstname VARCHAR(100),
  lastname VARCHAR(100),
  PRIMARY KEY (passenger_id)
);

CREATE TABLE passengerdetails (
  passenger_id INT,
  birthdate DATE,
  sex VARCHAR(1),
  street VARCHAR(100),
  city VARCHAR(100),
  zip VARCHAR(10),
  country VARCHAR(100),
  emailaddress VARCHAR(120),
  telephoneno VARCHAR(30),
  PRIMARY KEY (passenger_id),
  FOREIGN KEY (passenger_id) REFERENCES passenger (passenger_id)
);

CREATE TABLE booking (
  booking_id INT,
  flight_id INT,
  seat VARCHAR(4),
  passenger_id INT,
  price DECIMAL(10,2),
  PRIMARY KEY (booking_id),
  FOREIGN KEY (flight_id) REFERENCES flight (flight_id),
  FOREIGN KEY (passenger_id) REFERENCES passenger (passenger_id)
);

CREATE TABLE weatherdata (
  log_date DATE,
  log_time VARCHAR(8),
  station INT,
  temperature DECIMAL(4,1),
  humidity DECIMAL(4,1),
  airpressure DECIMAL(10,2),
  wind DECIMAL(5,2),
  weather VARCHAR(20),
  winddirection INT,
  PRIMARY KEY (log_date, log_time, station)
);
)sql";

}  // namespace dataset_ddl

struct BundledDataset {
  std::string name;
  Schema schema;
  Complexity complexity = Complexity::Easy;
  std::optional<Table> synthetic_table;  // appended before 2NF/3NF injection
};

inline std::vector<BundledDataset> bundled_datasets() {
  std::vector<BundledDataset> out;
  out.push_back({"Orders", parse_ddl(dataset_ddl::kOrders), Complexity::Easy,
                 parse_ddl(dataset_ddl::kOrdersSynthetic).tables.front()});
  out.push_back({"Advertising", parse_ddl(dataset_ddl::kAdvertising), Complexity::Medium, std::nullopt});
  out.push_back({"AirportDB", parse_ddl(dataset_ddl::kAirportDb), Complexity::Hard, std::nullopt});
  return out;
}

inline std::optional<BundledDataset> find_dataset(std::string_view name) {
  for (auto& d : bundled_datasets())
    if (iequals(d.name, name)) return d;
  return std::nullopt;
}

}  // namespace normloop
