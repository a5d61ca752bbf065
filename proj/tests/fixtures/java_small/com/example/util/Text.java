package com.example.util;

/**
 * Small text helpers shared by the sample app.
 */
public class Text {
    public static final String PREFIX = "cache:";

    public static String withPrefix(String key) {
        return PREFIX + key;
    }
}
