#include "memrank/profile.hpp"

#include <stdexcept>

namespace memrank {

DatasetProfile builtin_profile(const std::string& name) {
  if (name == "goodreads") {
    return DatasetProfile{
        "goodreads",
        "Book Name",
        "book",
        "books",
        "read",
        "reading",
        {{"author", "Author"}, {"genres", "Genres"}, {"series", "Series"}, {"series_id", "Series Id"}},
        {"Author", "Genres", "Series"},
    };
  }
  if (name == "movielens") {
    return DatasetProfile{
        "movielens",
        "Movie Name",
        "movie",
        "movies",
        "watched",
        "viewing",
        {{"director", "Director"}, {"all_genres", "All Genres"}, {"main_genre", "Main Genre"}},
        {"Director", "All Genres", "Main Genre"},
    };
  }
  if (name == "cds") {
    return DatasetProfile{
        "cds",
        "Album Name",
        "album",
        "albums",
        "listened to",
        "listening",
        {{"price", "Price"}, {"salesRank", "Sales Rank"}, {"brand", "Brand"}, {"categories", "Categories"}},
        {"Brand", "Categories", "Price"},
    };
  }
  if (name == "generic") {
    return DatasetProfile{
        "generic",
        "Item Name",
        "item",
        "items",
        "interacted with",
        "interaction",
        {{"tags", "Tags"}},
        {"Tags"},
    };
  }
  throw std::invalid_argument("unknown dataset profile: " + name);
}

}  // namespace memrank
