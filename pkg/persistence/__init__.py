"""File formats: instance and value-table JSON documents, CSV reports."""
