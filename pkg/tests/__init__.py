"""mvhp tests package"""
