"""
Core package for application-wide components.

This package contains:
- exceptions.py: Custom exceptions
- types.py: Runtime value types (embeddings, image handles, prompt records)
- dto/: Pydantic models for configuration and artifacts
- templates.py: Instruction prompts sent to language and vision models
"""
