"""FastAPI service wrapping the lab: request/response models, handlers, app."""
