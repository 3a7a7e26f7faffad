"""Tests for document schemas and validation."""

import pytest

from plvc_quantile.models.errors import ArgumentError
from plvc_quantile.resources import DOCUMENT_MODELS, SCHEMA_NAMES, get_schema, validate_document


class TestGetSchema:
    """Tests for loading packaged schemas."""

    @pytest.mark.parametrize("name", SCHEMA_NAMES)
    def test_should_declare_every_model_field(self, name):
        # Arrange
        model = DOCUMENT_MODELS[name]

        # Act
        schema = get_schema(name)

        # Assert
        assert schema["$schema"].startswith("https://json-schema.org/draft/2020-12")
        assert set(schema["properties"]) == set(model.model_fields)

    @pytest.mark.parametrize("name", SCHEMA_NAMES)
    def test_should_require_exactly_the_fields_without_defaults(self, name):
        # Arrange
        model = DOCUMENT_MODELS[name]
        required = {k for k, f in model.model_fields.items() if f.is_required()}

        # Act
        schema = get_schema(name)

        # Assert
        assert set(schema.get("required", [])) == required

    def test_should_reject_unknown_document_name(self):
        # Act / Assert
        with pytest.raises(ArgumentError, match="Unknown"):
            get_schema("residuals")


class TestValidateDocument:
    """Tests for validating emitted documents."""

    def test_should_accept_a_fit_document(self, sim_dataset, spec_k1, solver):
        # Arrange
        from plvc_quantile.services.fitting import fit

        doc = fit(sim_dataset, spec_k1, 0.5, solver=solver).to_document().to_dict()

        # Act
        model = validate_document("fit", doc)

        # Assert
        assert model.tau == 0.5

    def test_should_reject_document_missing_required_fields(self):
        # Act / Assert
        with pytest.raises(ArgumentError):
            validate_document("test_result", {"method": "qrs", "statistic": 1.0})
