import { test, expect } from '@playwright/test';

test('list loads', async ({ page }) => {
  await page.goto('/app/list');
  await expect(page.locator('[data-test=row-1]')).toBeVisible();
});

test('next page navigates', async ({ page }) => {
  await page.goto('/app/list');
  await page.locator('[data-test=next-page]').click();
  await expect(page.locator('[data-test=page-label]')).toHaveText('Page 2');
});
