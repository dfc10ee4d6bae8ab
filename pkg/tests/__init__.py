"""Test package for the DBF tracker."""
